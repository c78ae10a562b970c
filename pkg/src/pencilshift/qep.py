"""Open-loop quadratic eigenproblem ``(lam^2 M + lam C + K) x = 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from . import errors
from .model import DEFAULT_TOL, QuadraticSystem, canonical_order, conjugate_partners
from .numerics import real_matmul

__all__ = [
    "EigenpairSet",
    "OrthogonalityDiagnostics",
    "open_loop_spectrum",
    "orthogonality_diagnostics",
    "controllability_table",
    "QZ_MAX_N",
]

# ``method="auto"`` uses QZ up to this many degrees of freedom
QZ_MAX_N = 300


@dataclass(frozen=True)
class EigenpairSet:
    """All 2n eigenpairs in canonical order with unit-norm eigenvectors.

    Order is (Re ascending, |Im| ascending, Im > 0 first), so conjugate
    partners are adjacent, and the partner columns are exact conjugates.
    """

    values: np.ndarray
    vectors: np.ndarray
    method: str

    def residuals(self, system: QuadraticSystem):
        """Relative residual ``|P(lam) x| / ((|lam|^2|M| + |lam||C| + |K|)|x|)``."""
        lam = self.values
        X = self.vectors
        R = real_matmul(system.M, X) * lam**2 + real_matmul(system.C, X) * lam
        R += real_matmul(system.K, X)
        nM, nC, nK = (np.linalg.norm(A, 2) for A in (system.M, system.C, system.K))
        scale = (np.abs(lam) ** 2 * nM + np.abs(lam) * nC + nK) * np.linalg.norm(X, axis=0)
        return np.linalg.norm(R, axis=0) / scale


def _cholesky_companion(system):
    n = system.n
    L = np.linalg.cholesky(system.M)

    def congruence(A):
        T = sla.solve_triangular(L, A, lower=True)
        return sla.solve_triangular(L, T.T, lower=True).T

    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -congruence(system.K)
    A[n:, n:] = -congruence(system.C)
    w, V = sla.eig(A, overwrite_a=True, check_finite=False)
    X = sla.solve_triangular(L.T, V[:n], lower=False)
    return w, X


def _qz(system):
    # [K 0; 0 I] z = lam [-C -M; I 0] z with z = [x; lam x]
    n = system.n
    Z, I = np.zeros((n, n)), np.eye(n)
    A = np.block([[system.K, Z], [Z, I]])
    B = np.block([[-system.C, -system.M], [I, Z]])
    w, V = sla.eig(A, B, check_finite=False)
    if not np.all(np.isfinite(w)):
        raise errors.EigensolverFailure("QZ returned infinite eigenvalues")
    # keep whichever half of z has the smaller normalized residual
    best, best_res = None, None
    for block in (V[:n], V[n:]):
        R = real_matmul(system.M, block) * w**2 + real_matmul(system.C, block) * w
        R += real_matmul(system.K, block)
        res = np.abs(R).sum(axis=0) / np.abs(block).sum(axis=0)
        if best is None:
            best, best_res = block.copy(), res
        else:
            pick = res < best_res
            best[:, pick] = block[:, pick]
            best_res = np.minimum(res, best_res)
    return w, best


def _normalize(values, X, method):
    X = X / np.linalg.norm(X, axis=0)
    for j in range(X.shape[1]):
        x = X[:, j]
        if method == "qz":
            # keep the LAPACK phase, fix the sign on the first significant entry
            i = int(np.argmax(np.abs(x) > 1e-8))
            if x[i].real < 0:
                X[:, j] = -x
        else:
            i = int(np.argmax(np.abs(x)))
            X[:, j] = x * (np.conj(x[i]) / abs(x[i]))
    perm = conjugate_partners(values, DEFAULT_TOL.conjugate)
    values = values.copy()
    for i, j in enumerate(perm):
        if i == j:
            values[i] = values[i].real
            X[:, i] = X[:, i].real
        elif values[i].imag > 0:
            values[j] = np.conj(values[i])
            X[:, j] = np.conj(X[:, i])
    return values, X


def _check_distinct(values, tol):
    pts = np.column_stack([values.real, values.imag])
    r = tol * (1.0 + np.abs(values).max())
    for i, j in cKDTree(pts).query_pairs(r):
        lim = tol * (1.0 + max(abs(values[i]), abs(values[j])))
        if abs(values[i] - values[j]) <= lim:
            raise errors.DefectivePencil(
                f"eigenvalues {values[i]} and {values[j]} are not distinct"
            )


def open_loop_spectrum(system: QuadraticSystem, method="auto", check_distinct=True):
    """Compute all 2n eigenpairs of the open-loop pencil.

    Parameters
    ----------
    method : {"auto", "cholesky", "qz"}
        ``"cholesky"`` reduces ``M = L L^T`` and solves the standard
        first-companion problem (fast, default for large n); eigenvectors
        are rotated so their largest entry is real and positive.
        ``"qz"`` runs generalized QZ on the unreduced linearization
        ``[K 0; 0 I] - lam [-C -M; I 0]`` and keeps the LAPACK phase
        (sign fixed so the first significant entry has a nonnegative real
        part), which reproduces the eigenvector scaling of common reference
        environments. ``"auto"`` picks QZ for ``n <= QZ_MAX_N``.
    check_distinct : bool
        Raise DefectivePencil when two eigenvalues coincide.
    """
    if method == "auto":
        method = "qz" if system.n <= QZ_MAX_N else "cholesky"
    try:
        if method == "cholesky":
            w, X = _cholesky_companion(system)
        elif method == "qz":
            w, X = _qz(system)
        else:
            raise errors.InvalidConfig(f"unknown eigensolver method {method!r}")
    except (np.linalg.LinAlgError, ValueError) as exc:
        if isinstance(exc, errors.PencilShiftError):
            raise
        raise errors.EigensolverFailure(str(exc)) from exc
    w, X = _normalize(np.asarray(w, dtype=complex), np.asarray(X, dtype=complex), method)
    order = canonical_order(w)
    w, X = w[order], X[:, order]
    if check_distinct:
        _check_distinct(w, DEFAULT_TOL.distinct)
    w.setflags(write=False)
    X.setflags(write=False)
    return EigenpairSet(w, X, method)


@dataclass(frozen=True)
class OrthogonalityDiagnostics:
    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray
    offdiag_rel: tuple


def _offdiag_rel(D):
    d = np.diag(D).copy()
    np.fill_diagonal(D, 0.0)
    off = np.linalg.norm(D)
    np.fill_diagonal(D, d)
    return float(off / np.linalg.norm(d))


def orthogonality_diagnostics(eig: EigenpairSet, system: QuadraticSystem):
    """The three block-diagonalizing relations for the full eigenpair set.

    For exact eigenpairs with distinct eigenvalues ``D1, D2, D3`` are
    diagonal; ``offdiag_rel`` reports ``|offdiag|_F / |diag|_F`` for each.
    """
    lam = np.asarray(eig.values)
    X = np.asarray(eig.vectors)
    SM = X.T @ real_matmul(system.M, X)
    SC = X.T @ real_matmul(system.C, X)
    SK = X.T @ real_matmul(system.K, X)
    outer = np.multiply.outer(lam, lam)
    D1 = outer * SM - SK
    D2 = outer * SC + lam[:, None] * SK + SK * lam[None, :]
    D3 = lam[:, None] * SM + SM * lam[None, :] + SC
    return OrthogonalityDiagnostics(D1, D2, D3, tuple(_offdiag_rel(D) for D in (D1, D2, D3)))


def controllability_table(X1, B):
    """``|x_j^T b_k| / (|x_j| |b_k|)`` as a p x m array."""
    X1 = np.asarray(X1)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if X1.shape[0] != B.shape[0]:
        raise errors.DimensionMismatch("X1 and B must have the same number of rows")
    num = np.abs(X1.T @ B)
    return num / np.outer(np.linalg.norm(X1, axis=0), np.linalg.norm(B, axis=0))
