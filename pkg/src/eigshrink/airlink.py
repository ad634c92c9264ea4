"""Synthetic link generation: QAM constellations, Rayleigh draws, interference streams.

Square QAM constellations carry Gray labels with the sign bit of each
axis first (bit value 0 selects the positive half-axis), so per-axis
adjacent points differ in exactly one bit and the sign decision of each
axis is carried by a single bit.  All generators take an explicit
``numpy`` Generator; nothing in this module touches global RNG state.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import hermitian
from .rng import crandn
from .shrinkage import SampleBlock

SUPPORTED_ORDERS = (4, 16, 64)


class UnsupportedOrder(Exception):
    """Constellation order outside the supported square QAM set."""


@dataclass(frozen=True)
class Constellation:
    """Unit-energy square QAM with Gray labels.

    ``points[v]`` is the symbol whose label is the ``k``-bit binary
    expansion of ``v`` (MSB first); ``labels[v]`` spells out those bits.
    The first ``k/2`` bits select the I coordinate, the rest the Q
    coordinate.
    """

    order: int
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self):
        return self.labels.shape[1]


def _gray_to_index(g):
    b = g
    shift = 1
    while (g >> shift) > 0:
        b ^= g >> shift
        shift += 1
    return b


def _axis_coordinate(label, bits):
    """Map a per-axis label to its PAM level.

    The MSB is the sign (0 -> positive); the remaining bits Gray-encode
    the magnitude rank, giving levels +-1, +-3, ..., +-(2^bits - 1) with
    one-bit transitions between neighbours along the axis.
    """
    sign = -1.0 if (label >> (bits - 1)) & 1 else 1.0
    if bits == 1:
        return sign
    rank = _gray_to_index(label & ((1 << (bits - 1)) - 1))
    return sign * (2 * rank + 1)


@lru_cache(maxsize=None)
def build_constellation(q):
    """Unit-average-energy Gray-labeled square QAM of order ``q`` (4, 16 or 64)."""
    if q not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"order {q} not supported; choose from {SUPPORTED_ORDERS}")
    k = q.bit_length() - 1
    ka = k // 2
    axis = np.array([_axis_coordinate(v, ka) for v in range(1 << ka)])
    # Mean energy of the {+-1, +-3, ...} grid is (4^ka - 1)/3 per axis.
    norm = np.sqrt(2.0 * (4.0**ka - 1.0) / 3.0)
    labels = np.array([[(v >> (k - 1 - j)) & 1 for j in range(k)] for v in range(q)], dtype=np.uint8)
    points = np.array([(axis[v >> ka] + 1j * axis[v & ((1 << ka) - 1)]) / norm for v in range(q)])
    points.flags.writeable = False
    labels.flags.writeable = False
    cons = Constellation(order=q, points=points, labels=labels)
    assert abs(np.mean(np.abs(points) ** 2) - 1.0) < 1e-12
    return cons


def modulate(cons, bits):
    """Map rows of bits (shape ``(n, k)``, MSB first) to constellation points."""
    bits = np.asarray(bits)
    k = cons.bits_per_symbol
    if bits.shape[-1] != k:
        raise ValueError(f"expected {k} bits per symbol, got {bits.shape[-1]}")
    weights = 1 << np.arange(k - 1, -1, -1)
    return cons.points[bits @ weights]


@dataclass(frozen=True)
class LinkScales:
    """Per-entry channel variances expressed in dB over unit-power noise."""

    snr_db: float
    inr_db: float

    def __post_init__(self):
        if not (np.isfinite(self.snr_db) and np.isfinite(self.inr_db)):
            raise ValueError("SNR/INR must be finite dB values")

    @property
    def sigma2_d(self):
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def sigma2_i(self):
        return 10.0 ** (self.inr_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence block: desired channel vector and interference matrix."""

    h_d: np.ndarray
    h_i: np.ndarray

    @property
    def n_r(self):
        return self.h_d.shape[0]

    @property
    def n_i(self):
        return self.h_i.shape[1]


def draw_channel(cfg, scales, rng):
    """i.i.d. circular complex Gaussian channel draw with configured variances.

    ``cfg`` needs ``n_r`` and ``n_i`` attributes; ``scales`` needs
    ``sigma2_d`` and ``sigma2_i``.  Deterministic under a fixed rng state.
    """
    h_d = np.sqrt(scales.sigma2_d) * crandn(rng, cfg.n_r)
    h_i = np.sqrt(scales.sigma2_i) * crandn(rng, cfg.n_r, cfg.n_i)
    return ChannelRealization(h_d=h_d, h_i=h_i)


def true_covariance(ch):
    """Interference-plus-noise covariance for the drawn channel.

    The interference matrix is held fixed within an estimation block, so
    the per-block truth is ``H_I H_I^H + I``; positive definite with
    minimum eigenvalue at least 1 (unit-power noise floor).
    """
    n_r = ch.n_r
    return hermitian(ch.h_i @ ch.h_i.conj().T + np.eye(n_r))


def interference_noise_samples(ch, m, q_i, rng):
    """Draw ``m`` interference-plus-noise snapshots ``H_I s_I + n``.

    Interferer symbols are uniform over the unit-energy constellation of
    order ``q_i`` and the noise is unit-power complex Gaussian, so the
    sample covariance converges to :func:`true_covariance` as ``m`` grows.
    """
    if m < 1:
        raise ValueError("sample count must be at least 1")
    cons = build_constellation(q_i)
    n_r, n_i = ch.h_i.shape
    sym = cons.points[rng.integers(0, cons.order, size=(n_i, m))]
    u = ch.h_i @ sym + crandn(rng, n_r, m)
    return SampleBlock(u.T)


def received_symbol(ch, s_d, u):
    """Received vector ``h_d * s_d + u`` for one desired symbol."""
    return ch.h_d * s_d + u
