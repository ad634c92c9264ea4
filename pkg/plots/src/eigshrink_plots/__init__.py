"""Render eigshrink experiment CSVs into the standard figures.

Reads only the documented CSV schemas (no recomputation) and produces
deterministic images: an MI-vs-rho figure with one series per window
length, an MI-vs-SNR figure with one series per estimator (one panel per
input CSV), and the eigenvalue-bias figure.
"""

__version__ = "0.1.0"
