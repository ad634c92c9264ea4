"""Dense complex Hermitian linear algebra for small matrices.

Everything in this module operates on plain ``numpy`` arrays of
``complex128``.  Matrices are expected to have passed through
:func:`hermitian`, which validates and normalizes them to exact Hermitian
form; the receive array sizes in this project never exceed 8, so all
routines are dense and a full-spectrum eigensolve is acceptable wherever
extremal eigenvalues are needed.
"""

import numpy as np
import scipy.linalg

# Relative asymmetry accepted before an input is rejected as non-Hermitian.
HERMITIAN_TOL = 1e-12

# Scale factor of the Cholesky pivot floor:  a pivot at or below
# dim * PIVOT_RTOL * trace(A) flags the matrix as numerically singular.
PIVOT_RTOL = 1e-14


class NotPositiveDefinite(Exception):
    """Matrix is numerically singular or indefinite (e.g. an SCM with too few samples)."""


class NoConvergence(Exception):
    """The eigensolver failed to converge; the input is pathological."""


class DimensionMismatch(Exception):
    """Operands have incompatible shapes."""


def hermitian(a, tol=HERMITIAN_TOL):
    """Validate a square matrix and normalize it to exact Hermitian form.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Matrix that is Hermitian up to floating-point accumulation drift.
    tol : float
        Maximum accepted asymmetry, relative to the largest entry
        magnitude (with a floor of 1).

    Returns
    -------
    ndarray
        ``(a + a^H) / 2`` with the diagonal imaginary parts forced to
        exactly zero, so downstream code can rely on exact symmetry.

    Raises
    ------
    DimensionMismatch
        If ``a`` is not a square 2-D array.
    ValueError
        If entries are not finite or the asymmetry exceeds ``tol``.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionMismatch("matrix dimension must be at least 1")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, float(np.abs(a).max()))
    drift = float(np.abs(a - a.conj().T).max())
    if drift > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: asymmetry {drift:.3e} exceeds {tol * scale:.3e}"
        )
    h = 0.5 * (a + a.conj().T)
    np.fill_diagonal(h, h.diagonal().real)
    return h


def trace(a):
    """Sum of the diagonal real parts (non-negative for PSD input)."""
    a = np.asarray(a)
    return float(np.trace(a).real)


def frobenius_norm_sq(a):
    """Squared Frobenius norm, the sum of squared entry moduli."""
    a = np.asarray(a)
    return float(np.vdot(a, a).real)


def cholesky(a):
    """Lower-triangular factor ``L`` with ``L L^H = a``.

    The factorization runs the classic Cholesky-Crout recursion so the
    pivots can be checked against a scale-invariant floor of
    ``dim * 1e-14 * trace(a)``; matrices failing that test (singular or
    indefinite, e.g. a sample covariance built from fewer samples than
    dimensions) raise :class:`NotPositiveDefinite`.
    """
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    pivot_floor = n * PIVOT_RTOL * trace(a)
    low = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        pivot = a[j, j].real - np.vdot(low[j, :j], low[j, :j]).real
        if pivot <= pivot_floor or pivot <= 0.0:
            raise NotPositiveDefinite(
                f"pivot {pivot:.6e} at index {j} is at or below the floor "
                f"{pivot_floor:.6e}; matrix is numerically singular or indefinite"
            )
        ljj = np.sqrt(pivot)
        low[j, j] = ljj
        if j + 1 < n:
            low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j].conj()) / ljj
    return low


def invert_pd(a):
    """Inverse of a positive-definite Hermitian matrix.

    Computed from the Cholesky factor as ``L^{-H} L^{-1}`` and
    re-symmetrized, so the result is exactly Hermitian.

    Raises
    ------
    NotPositiveDefinite
        Propagated from :func:`cholesky`.
    """
    low = cholesky(a)
    eye = np.eye(low.shape[0], dtype=np.complex128)
    low_inv = scipy.linalg.solve_triangular(low, eye, lower=True)
    return hermitian(low_inv.conj().T @ low_inv)


def eig_extremes(a):
    """Smallest and largest eigenvalue of a Hermitian matrix.

    The full spectrum is computed internally (dimensions here are tiny),
    and the extremes are returned as ``(lambda_min, lambda_max)``.

    Raises
    ------
    NoConvergence
        If the LAPACK eigensolver fails to converge.
    """
    a = np.asarray(a, dtype=np.complex128)
    try:
        w = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return float(w[0]), float(w[-1])


def forward_solve(low, y):
    """Solve ``low @ x = y`` for lower-triangular ``low``.

    ``y`` may be a vector or a matrix of stacked right-hand-side columns.
    """
    low = np.asarray(low)
    y = np.asarray(y)
    if low.ndim != 2 or low.shape[0] != low.shape[1]:
        raise DimensionMismatch(f"expected a square triangular matrix, got {low.shape}")
    if y.shape[0] != low.shape[0]:
        raise DimensionMismatch(
            f"right-hand side of length {y.shape[0]} does not match dimension {low.shape[0]}"
        )
    return scipy.linalg.solve_triangular(low, y, lower=True)


def scaled_identity(c, n):
    """``c * I`` of dimension ``n`` as a complex Hermitian matrix."""
    if n < 1:
        raise DimensionMismatch("identity dimension must be at least 1")
    c = float(c)
    if not np.isfinite(c):
        raise ValueError("scale must be finite")
    return c * np.eye(n, dtype=np.complex128)
