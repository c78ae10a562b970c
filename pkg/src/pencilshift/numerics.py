"""Dense linear-algebra kernels with residual and conditioning reports."""

from __future__ import annotations

import contextlib
import contextvars
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse
from scipy.linalg import lapack

from . import errors

__all__ = [
    "LinearSolveReport",
    "solve_linear",
    "smallest_singular_pair",
    "singular_value_ratio",
    "condition_estimate",
    "record_solves",
    "real_matmul",
]

EPS = np.finfo(float).eps
# matrices at most this full are multiplied in compressed form
SPARSE_DENSITY = 0.05

_solve_log = contextvars.ContextVar("solve_log", default=None)


@contextlib.contextmanager
def record_solves():
    """Collect the dimension of every :func:`solve_linear` call.

    >>> with record_solves() as dims:
    ...     _ = solve_linear(np.eye(2), np.ones(2))
    >>> dims
    [2]
    """
    dims = []
    token = _solve_log.set(dims)
    try:
        yield dims
    finally:
        _solve_log.reset(token)


@dataclass(frozen=True)
class LinearSolveReport:
    solution: np.ndarray
    residual_norm: float
    condition_estimate: float


def _lu(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise errors.DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise errors.DimensionMismatch("matrix has non-finite entries")
    anorm = np.linalg.norm(A, 1)
    with warnings.catch_warnings():
        # exact zero pivots are reported through ``singular`` below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    singular = anorm == 0.0 or pivots.min() <= 1e3 * EPS * anorm
    return lu, piv, anorm, singular


def _rcond(lu, anorm):
    (gecon,) = lapack.get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    return rcond


def solve_linear(A, rhs) -> LinearSolveReport:
    """LU solve of ``A x = rhs`` with recomputed residual.

    Raises SingularMatrix when a pivot falls below ``1e3 * eps * |A|_1``.
    """
    lu, piv, anorm, singular = _lu(A)
    log = _solve_log.get()
    if log is not None:
        log.append(A.shape[0])
    rhs = np.asarray(rhs)
    if rhs.shape[0] != A.shape[0]:
        raise errors.DimensionMismatch(f"rhs has {rhs.shape[0]} rows, expected {A.shape[0]}")
    if singular:
        raise errors.SingularMatrix("matrix is numerically singular")
    x = sla.lu_solve((lu, piv), rhs, check_finite=False)
    res = float(np.linalg.norm(A @ x - rhs))
    rcond = _rcond(lu, anorm)
    cond = np.inf if rcond == 0 else max(1.0, 1.0 / rcond)
    return LinearSolveReport(x, res, cond)


def condition_estimate(A) -> float:
    """1-norm condition estimate (LAPACK ``gecon``); ``inf`` when singular."""
    lu, _, anorm, singular = _lu(A)
    if singular:
        return np.inf
    rcond = _rcond(lu, anorm)
    return np.inf if rcond == 0 else max(1.0, 1.0 / rcond)


def smallest_singular_pair(A):
    """Return ``(sigma_min, v)`` with ``v`` the unit right singular vector."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise errors.DimensionMismatch("matrix has non-finite entries")
    _, s, vh = np.linalg.svd(A)
    return float(s[-1]), vh[-1].conj()


def singular_value_ratio(A) -> float:
    """``sigma_min / sigma_max``; values only, no vectors."""
    s = sla.svdvals(A, check_finite=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def real_matmul(A, Z):
    """``A @ Z`` for real ``A`` and complex ``Z`` using two real products.

    Large ``A`` with few nonzeros (banded chains) times a wide ``Z`` is
    multiplied as CSR.
    """
    Z = np.asarray(Z)
    A = np.asarray(A)
    wide = Z.ndim == 2 and Z.shape[1] > 16
    if wide and A.size > 10_000 and np.count_nonzero(A) <= SPARSE_DENSITY * A.size:
        A = scipy.sparse.csr_array(A)
    if not np.iscomplexobj(Z):
        return A @ Z
    return A @ Z.real + 1j * (A @ Z.imag)
