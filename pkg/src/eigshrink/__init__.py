"""Shrinkage-regularized covariance estimation for interference rejection combining.

The package is organized as:

* :mod:`eigshrink.linalg` -- dense complex Hermitian linear algebra for
  small matrices (trace, Frobenius norm, Cholesky, PD inversion, extremal
  eigenvalues, triangular solves).
* :mod:`eigshrink.shrinkage` -- sample covariance, scaled-identity
  shrinkage, regularization-weight selection rules, and extremal
  eigenvalue bounds.
* :mod:`eigshrink.airlink` -- synthetic link generation: Gray-labeled QAM,
  Rayleigh channel draws, interference-plus-noise sample streams.
* :mod:`eigshrink.receiver` -- whitening / MMSE detection chain, per-bit
  LLRs, and the bitwise mutual-information metric.
* :mod:`eigshrink.harness` / :mod:`eigshrink.cli` -- configuration-driven
  Monte-Carlo experiments with CSV output.
"""

__version__ = "0.1.0"
