"""Sample covariance, scaled-identity shrinkage, and regularization-weight selection.

The estimator family is the convex combination

    (1 - rho) * scm + rho * (trace(scm) / n) * I,   rho in [0, 1],

which pulls the eigenvalues of a small-sample covariance estimate toward
their mean without changing the trace.  The weight ``rho`` is chosen so
that the minimum eigenvalue of the combination tracks the minimum
eigenvalue of the true covariance, which is what the whitening receiver
downstream is sensitive to.  Several selection rules are provided, from
ensemble/oracle references used for validation to the practical
two-window rule a receiver can actually run, plus cheap trace/Frobenius
bounds on the extremal eigenvalues that avoid an eigensolve.
"""

import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linalg import (
    DimensionMismatch,
    NotPositiveDefinite,
    eig_extremes,
    frobenius_norm_sq,
    hermitian,
    invert_pd,
    scaled_identity,
    trace,
)
from .rng import crandn, substream

BETA_CACHE_ENV = "EIGSHRINK_BETA_CACHE"
DEFAULT_BETA_CACHE = ".beta_cache"

# Ensemble spread below this is treated as degenerate (flat spectrum).
DEGENERATE_SPREAD = 1e-12


class RhoOutOfRange(ValueError):
    """Shrinkage weight outside [0, 1]."""


class DegenerateEnsemble(Exception):
    """Every ensemble member already has a flat spectrum; rho is irrelevant."""


class ZeroTrace(Exception):
    """Covariance estimate has non-positive trace."""


class NegativeDiscriminant(Exception):
    """Trace/Frobenius data violates the Hermitian Cauchy-Schwarz relation."""


class RhoPolicy(Enum):
    """Provenance of the shrinkage weight attached to an estimate."""

    NONE = "none"
    ORACLE_GRID = "oracle_grid"
    MIN_EIG_CLOSED_FORM = "min_eig_closed_form"
    PRACTICAL = "practical"
    FIXED = "fixed"


@dataclass(frozen=True)
class SampleBlock:
    """Received vectors from one estimation window, one sample per row.

    ``vectors`` has shape ``(M, N_R)``: M snapshots of the N_R-antenna
    interference-plus-noise vector.
    """

    vectors: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.complex128)
        if vec.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D (M, N_R) array, got shape {vec.shape}")
        if vec.shape[0] < 1 or vec.shape[1] < 1:
            raise DimensionMismatch("sample block needs at least one sample and one antenna")
        if not np.all(np.isfinite(vec.real)) or not np.all(np.isfinite(vec.imag)):
            raise ValueError("sample entries must be finite")
        object.__setattr__(self, "vectors", vec)

    @property
    def m(self):
        return self.vectors.shape[0]

    @property
    def n_r(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ShrinkageEstimate:
    """A regularized covariance with the weight used and how it was chosen.

    The unshrunk input ``scm`` is retained for diagnostics.
    """

    matrix: np.ndarray
    rho: float
    policy: RhoPolicy
    scm: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise RhoOutOfRange(f"rho must lie in [0, 1], got {self.rho}")
        if self.matrix.shape != self.scm.shape:
            raise DimensionMismatch("shrunk matrix and source SCM dimensions differ")


@dataclass(frozen=True)
class BetaCalibration:
    """Monte-Carlo bias factor of the minimum SCM eigenvalue.

    ``beta`` is the mean minimum eigenvalue of an ``m``-sample SCM of
    standard complex Gaussian ``n``-vectors (true covariance I, minimum
    eigenvalue 1), so it measures how far below the truth a small-sample
    estimate sits.
    """

    n: int
    m: int
    beta: float
    trials: int
    seed: int


def sample_covariance(block):
    """Maximum-likelihood sample covariance ``(1/M) sum u u^H``.

    Parameters
    ----------
    block : SampleBlock or array_like of shape (M, N_R)

    Returns
    -------
    ndarray
        PSD Hermitian matrix of rank at most ``min(M, N_R)``.
    """
    if not isinstance(block, SampleBlock):
        block = SampleBlock(block)
    vec = block.vectors
    return hermitian(vec.T @ vec.conj() / block.m)


def shrink(scm, rho, policy=RhoPolicy.FIXED):
    """Shrink a covariance estimate toward the scaled identity.

    Returns ``(1 - rho) * scm + rho * (trace(scm)/n) * I`` wrapped in a
    :class:`ShrinkageEstimate`.  The trace is preserved exactly (up to
    rounding), and for ``rho > 0`` with positive trace the result is
    positive definite even when ``scm`` is singular.
    """
    if not 0.0 <= rho <= 1.0:
        raise RhoOutOfRange(f"rho must lie in [0, 1], got {rho}")
    scm = hermitian(scm)
    n = scm.shape[0]
    target = trace(scm) / n
    matrix = hermitian((1.0 - rho) * scm + rho * scaled_identity(target, n))
    return ShrinkageEstimate(matrix=matrix, rho=float(rho), policy=policy, scm=scm)


def min_eig_shrunk(scm, rho):
    """Minimum eigenvalue of the shrunk estimate, without forming it.

    Shrinkage shifts every eigenvalue affinely, so the minimum eigenvalue
    of the combination is exactly
    ``(1 - rho) * lambda_min(scm) + rho * trace(scm) / n``.
    """
    if not 0.0 <= rho <= 1.0:
        raise RhoOutOfRange(f"rho must lie in [0, 1], got {rho}")
    scm = hermitian(scm)
    lam = eig_extremes(scm)[0]
    return (1.0 - rho) * lam + rho * trace(scm) / scm.shape[0]


def _clamp_unit(x):
    return min(1.0, max(0.0, float(x)))


def rho_closed_form(scm_ensemble, lambda_true):
    """Ensemble (Monte-Carlo) estimate of the optimal shrinkage weight.

    Evaluates the stationary point of the squared minimum-eigenvalue error
    over an ensemble of SCM realizations:

        rho = E[(lambda_true - lam)(t - lam)] / E[(t - lam)^2]

    with ``lam`` the minimum eigenvalue and ``t`` the eigenvalue mean
    (trace / n) of each member.  The result is clamped to [0, 1].

    This needs the distribution of the SCM, which a receiver only sees
    through one realization, so it is exposed for validation rather than
    used on the receive path.

    Raises
    ------
    DegenerateEnsemble
        If every member already has a flat spectrum (denominator ~ 0);
        the estimate equals the target and rho is irrelevant.
    """
    mats = [hermitian(m) for m in scm_ensemble]
    if len(mats) < 2:
        raise ValueError("ensemble must contain at least 2 matrices")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape[0] != n:
            raise DimensionMismatch("ensemble members have differing dimensions")
    lam = np.array([eig_extremes(m)[0] for m in mats])
    spread = np.array([trace(m) for m in mats]) / n - lam
    den = float(np.mean(spread**2))
    if den < DEGENERATE_SPREAD:
        raise DegenerateEnsemble(
            f"mean squared eigenvalue spread {den:.3e} is below {DEGENERATE_SPREAD:.0e}"
        )
    num = float(np.mean((lambda_true - lam) * spread))
    return _clamp_unit(num / den)


def _unit_grid(step):
    if not 0.0 < step <= 0.1:
        raise ValueError(f"grid step must lie in (0, 0.1], got {step}")
    return np.append(np.arange(0.0, 1.0, step), 1.0)


def rho_oracle_grid(scm, r_true, grid_step=0.01):
    """Grid search for the weight whose shrunk minimum eigenvalue is closest to truth.

    Scans ``rho`` over ``{0, grid_step, ..., 1}`` and returns the value
    minimizing ``(lambda_min(r_true) - lambda_min(shrunk))^2``; ties break
    toward smaller ``rho``.  Requires the true covariance, so this is an
    oracle reference.
    """
    scm = hermitian(scm)
    r_true = hermitian(r_true)
    if scm.shape != r_true.shape:
        raise DimensionMismatch("SCM and true covariance dimensions differ")
    grid = _unit_grid(grid_step)
    lam_target = eig_extremes(r_true)[0]
    lam = eig_extremes(scm)[0]
    mean_diag = trace(scm) / scm.shape[0]
    err = (lam_target - ((1.0 - grid) * lam + grid * mean_diag)) ** 2
    return float(grid[int(np.argmin(err))])


def calibrate_beta(n, m, trials=20000, seed=0):
    """Monte-Carlo calibration of the small-sample minimum-eigenvalue bias.

    Draws ``trials`` independent SCMs of ``m`` standard complex Gaussian
    ``n``-vectors (true covariance I) and averages their minimum
    eigenvalues.  Since the true minimum eigenvalue is 1, the mean is the
    bias factor directly.  Deterministic given ``seed``.  The mean is
    clamped to 1 from above: the expectation cannot exceed the truth, so
    any excursion is Monte-Carlo noise.
    """
    if n < 1 or m < 1:
        raise ValueError("matrix dimension and sample count must be positive")
    if trials < 1000:
        raise ValueError(f"calibration needs at least 1000 trials, got {trials}")
    rng = substream(seed, "beta-calibration", n, m)
    vals = np.empty(trials)
    chunk = max(1, min(trials, 4_000_000 // max(1, m * n)))
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        x = crandn(rng, c, m, n)
        scm = np.einsum("tmi,tmj->tij", x, x.conj()) / m
        vals[done : done + c] = np.linalg.eigvalsh(scm)[:, 0]
        done += c
    beta = min(1.0, float(vals.mean()))
    return BetaCalibration(n=n, m=m, beta=beta, trials=trials, seed=seed)


def beta_cache_path(path=None):
    """Resolve the calibration cache path (argument, else environment, else default)."""
    if path is not None:
        return path
    return os.environ.get(BETA_CACHE_ENV, DEFAULT_BETA_CACHE)


def load_beta_cache(path=None):
    """Read the calibration cache: one ``n,m,trials,seed,beta`` record per line."""
    path = beta_cache_path(path)
    cache = {}
    if not os.path.exists(path):
        return cache
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 5:
                raise ValueError(f"malformed calibration record in {path!r}: {line!r}")
            n, m, trials, seed = (int(f) for f in fields[:4])
            cal = BetaCalibration(n=n, m=m, beta=float(fields[4]), trials=trials, seed=seed)
            cache[(n, m, trials, seed)] = cal
    return cache


def append_beta_cache(cal, path=None):
    path = beta_cache_path(path)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(f"{cal.n},{cal.m},{cal.trials},{cal.seed},{cal.beta!r}\n")


def beta_cached(n, m, trials=20000, seed=0, path=None):
    """Calibration with a persistent text cache, so repeated runs skip the Monte Carlo."""
    cache = load_beta_cache(path)
    key = (n, m, trials, seed)
    if key in cache:
        return cache[key]
    cal = calibrate_beta(n, m, trials=trials, seed=seed)
    append_beta_cache(cal, path)
    return cal


def rho_practical(scm_small, scm_large, beta, use_bound=True):
    """Two-window shrinkage weight a receiver can compute online.

    ``scm_large`` comes from a long observation window and supplies a
    low-bias estimate of the true minimum eigenvalue; ``scm_small`` is the
    current estimation block and supplies the eigenvalue mean (its trace
    is unbiased at any window length).  The weight is

        beta * lambda_min(scm_large) / (trace(scm_small) / n)

    clamped to [0, 1], with ``beta`` the calibrated small-sample bias
    factor.  By default the minimum eigenvalue is approximated by the
    trace/Frobenius lower bound (:func:`min_eig_lower_bound`), which skips
    the eigensolve; pass ``use_bound=False`` for the exact eigenvalue.

    Raises
    ------
    ZeroTrace
        If ``trace(scm_small) <= 0``.
    """
    scm_small = hermitian(scm_small)
    scm_large = hermitian(scm_large)
    if scm_small.shape != scm_large.shape:
        raise DimensionMismatch("window covariance dimensions differ")
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    t = trace(scm_small)
    if t <= 0.0:
        raise ZeroTrace(f"trace {t} of the current block is not positive")
    if use_bound:
        try:
            lam = min_eig_lower_bound(scm_large)
        except NotPositiveDefinite:
            # Rank-deficient long window: fall back to the exact eigenvalue.
            lam = max(0.0, eig_extremes(scm_large)[0])
    else:
        lam = max(0.0, eig_extremes(scm_large)[0])
    mean_diag = t / scm_small.shape[0]
    return _clamp_unit(beta * lam / mean_diag)


def _spread_root(t, fsq, n):
    disc = n * (n - 1) * fsq - (n - 1) * t * t
    if disc < -1e-12:
        raise NegativeDiscriminant(
            f"n*(n-1)*||A||_F^2 - (n-1)*tr(A)^2 = {disc:.3e} < 0; "
            "input is not a valid Hermitian matrix"
        )
    return np.sqrt(max(disc, 0.0))


def max_eig_upper_bound(a):
    """Upper bound on the maximum eigenvalue from trace and Frobenius norm alone.

    For PSD ``A`` of dimension n:

        max_eig(A) <= (tr(A) + sqrt(n(n-1)||A||_F^2 - (n-1)tr(A)^2)) / n.

    The bound is tight for any 2x2 matrix and for scaled identities.
    """
    a = hermitian(a)
    n = a.shape[0]
    t = trace(a)
    return (t + _spread_root(t, frobenius_norm_sq(a), n)) / n


def min_eig_lower_bound(a):
    """Lower bound on the minimum eigenvalue of a PD matrix.

    Applies the maximum-eigenvalue bound to ``B = A^{-1}``:

        min_eig(A) = 1 / max_eig(B)
                  >= n / (tr(B) + sqrt(n(n-1)||B||_F^2 - (n-1)tr(B)^2)).

    Always positive and never above the true minimum eigenvalue; exact
    for 2x2 matrices.

    Raises
    ------
    NotPositiveDefinite
        Propagated from the inversion.
    """
    b = invert_pd(a)
    n = b.shape[0]
    t = trace(b)
    return n / (t + _spread_root(t, frobenius_norm_sq(b), n))
