"""Shared dense linear-algebra kernel.

Every determinant and quadratic form in the package goes through the
Cholesky routines here, in log space. Near-singular matrices (condition
number above COND_CAP estimated from the factor) are rejected rather than
regularized, so exactness identities downstream stay meaningful.
"""
import numpy as np

from .exceptions import NumericalDomainError

__all__ = [
    "COND_CAP",
    "chol_factor",
    "chol_logdet",
    "chol_solve",
    "quad_form",
    "inv_pd",
    "log_sum_exp",
]

COND_CAP = 1e12


def _as_sym(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericalDomainError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def chol_factor(a, what="matrix"):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises NumericalDomainError when the factorization fails or when the
    factor indicates a condition number above COND_CAP. Zero-dimensional
    input returns an empty factor (log-determinant 0 by convention).
    """
    a = _as_sym(a)
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError(f"{what} is not positive definite") from exc
    diag = np.diag(L)
    # cond2(A) = cond2(L)^2 and the diagonal ratio is a cheap lower bound
    # on cond2(L); good enough to fence off the pathological cases.
    ratio = diag.max() / diag.min()
    if ratio * ratio > COND_CAP:
        raise NumericalDomainError(
            f"{what} is numerically singular (condition estimate "
            f"{ratio * ratio:.3e} exceeds {COND_CAP:.0e})"
        )
    return L


def chol_logdet(a, what="matrix"):
    """log|A| for symmetric positive definite A (0.0 for the 0x0 matrix)."""
    L = chol_factor(a, what)
    if L.shape[0] == 0:
        return 0.0
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def chol_solve(L, b):
    """Solve A x = b given the lower Cholesky factor L of A."""
    if L.shape[0] == 0:
        return np.zeros_like(np.asarray(b, dtype=float))
    y = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, y)


def quad_form(L, x):
    """x' A^{-1} x given the lower Cholesky factor L of A."""
    x = np.asarray(x, dtype=float)
    if L.shape[0] == 0:
        return 0.0
    z = np.linalg.solve(L, x)
    return float(z @ z)


def inv_pd(a, what="matrix"):
    """Inverse of a symmetric positive definite matrix via its factor."""
    L = chol_factor(a, what)
    if L.shape[0] == 0:
        return np.zeros((0, 0))
    return chol_solve(L, np.eye(L.shape[0]))


def log_sum_exp(values):
    """log sum exp with max subtraction; -inf for an empty input."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return -np.inf
    hi = np.max(v)
    if not np.isfinite(hi):
        return float(hi)
    return float(hi + np.log(np.sum(np.exp(v - hi))))
