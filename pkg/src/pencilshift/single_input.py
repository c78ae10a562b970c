"""Explicit single-input assignment through the inverse of a Cauchy matrix.

No linear system is solved: with ``H = diag(b^T x_j) Hhat`` and ``Hhat``
the Cauchy matrix ``1 / (mu_s - lambda_l)``, the parameter vector follows
from the closed-form inverse of ``Hhat``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .model import (
    DEFAULT_TOL,
    AssignmentTarget,
    FeedbackSolution,
    QuadraticSystem,
    SpectrumPartition,
    StepReport,
    Tolerances,
    check_distinct,
)
from .qep import controllability_table
from .numerics import real_matmul

__all__ = [
    "CauchyPair",
    "cauchy_matrix",
    "cauchy_inverse_entries",
    "interpolation_sum",
    "beta_explicit",
    "beta_cauchy_sum",
    "beta_product_form",
    "feedback_from_beta",
    "assign_single",
]


@dataclass(frozen=True)
class CauchyPair:
    lambdas: np.ndarray
    mus: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=complex))
        mu = np.atleast_1d(np.asarray(self.mus, dtype=complex))
        if lam.shape != mu.shape or lam.ndim != 1:
            raise errors.DimensionMismatch("lambdas and mus must be vectors of equal length")
        tol = DEFAULT_TOL.distinct
        try:
            check_distinct(lam, tol)
            check_distinct(mu, tol)
        except errors.DistinctnessViolation as exc:
            raise errors.DegenerateSpacing(str(exc)) from None
        d = np.abs(mu[:, None] - lam[None, :])
        lim = tol * (1.0 + np.maximum(np.abs(mu)[:, None], np.abs(lam)[None, :]))
        if np.any(d <= lim):
            raise errors.DegenerateSpacing("a target coincides with a replaced eigenvalue")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mus", mu)

    @property
    def p(self):
        return len(self.lambdas)


def cauchy_matrix(pair: CauchyPair):
    """``Hhat[l, s] = 1 / (mu_s - lambda_l)`` (rows: lambdas, columns: mus)."""
    return 1.0 / (pair.mus[None, :] - pair.lambdas[:, None])


def _prod_except(v, i):
    return np.prod(np.delete(v, i))


def cauchy_inverse_entries(pair: CauchyPair):
    """Closed-form ``T = Hhat^{-1}``; rows index mus, columns index lambdas.

    ::

        t_ij = prod_k(lam_j - mu_k) prod_k(mu_i - lam_k)
               / ((lam_j - mu_i) prod_{k!=i}(mu_i - mu_k) prod_{k!=j}(lam_j - lam_k))
    """
    lam, mu = pair.lambdas, pair.mus
    p = pair.p
    a = np.array([np.prod(lam[j] - mu) / _prod_except(lam[j] - lam, j) for j in range(p)])
    c = np.array([np.prod(mu[i] - lam) / _prod_except(mu[i] - mu, i) for i in range(p)])
    return c[:, None] * a[None, :] / (lam[None, :] - mu[:, None])


def interpolation_sum(pair: CauchyPair, j):
    """``sum_i prod_{k!=j}(mu_i - lam_k) / prod_{k!=i}(mu_i - mu_k)``; equals 1."""
    lam, mu = pair.lambdas, pair.mus
    return sum(
        _prod_except(mu[i] - lam, j) / _prod_except(mu[i] - mu, i) for i in range(pair.p)
    )


def beta_cauchy_sum(pair: CauchyPair, tau, btx):
    """General closed form of ``beta`` for any delay ``tau >= 0``.

    ``beta_j = a_j sum_i c_i e^{tau mu_i} / (lam_j - mu_i) / (b^T x_j)`` with
    ``a_j, c_i`` the product factors of :func:`cauchy_inverse_entries`.
    """
    lam, mu = pair.lambdas, pair.mus
    p = pair.p
    w = np.exp(tau * mu)
    c = np.array([np.prod(mu[i] - lam) / _prod_except(mu[i] - mu, i) for i in range(p)])
    beta = np.empty(p, dtype=complex)
    for j in range(p):
        lead = np.prod(lam[j] - mu) / _prod_except(lam[j] - lam, j)
        beta[j] = lead * np.sum(c * w / (lam[j] - mu))
    return beta / np.asarray(btx, dtype=complex)


def beta_product_form(pair: CauchyPair, btx):
    """Undelayed ``beta_j = (mu_j - lam_j)/(b^T x_j) prod_{k!=j}(lam_j - mu_k)/(lam_j - lam_k)``."""
    lam, mu = pair.lambdas, pair.mus
    beta = np.array([
        (mu[j] - lam[j]) * _prod_except(lam[j] - mu, j) / _prod_except(lam[j] - lam, j)
        for j in range(pair.p)
    ])
    return beta / np.asarray(btx, dtype=complex)


def beta_explicit(pair: CauchyPair, tau, btx, threshold=0.0):
    """Parameter vector with ``beta^T H = [1..1] exp(tau Sigma)``.

    ``btx[j] = b^T x_j``. For ``tau == 0`` the shorter
    :func:`beta_product_form` is used, otherwise :func:`beta_cauchy_sum`.
    """
    btx = np.asarray(btx, dtype=complex)
    if btx.shape != (pair.p,):
        raise errors.DimensionMismatch(f"btx must have length {pair.p}")
    if np.any(np.abs(btx) <= threshold):
        raise errors.NotControllable("b^T x_j vanishes for some replaced eigenvector")
    if tau == 0:
        return beta_product_form(pair, btx)
    return beta_cauchy_sum(pair, tau, btx)


def _feedback_complex(M, C, X1, lambda1, beta):
    MX = real_matmul(M, X1)
    f = MX @ beta
    g = (MX * lambda1 + real_matmul(C, X1)) @ beta
    return f, g


def _realness(v):
    n = np.linalg.norm(v)
    return float(np.linalg.norm(v.imag) / n) if n > 0 else 0.0


def _to_real(v, what, tol):
    r = _realness(v)
    if r > tol:
        raise errors.ImaginaryResidue(
            f"{what} has relative imaginary part {r:.2e}; inputs are not self-conjugate"
        )
    return np.ascontiguousarray(v.real), r


def feedback_from_beta(M, C, X1, Lambda1, beta, tol=DEFAULT_TOL.realness):
    """``f = M X1 beta``, ``g = (M X1 Lambda1 + C X1) beta`` as real vectors.

    ``Lambda1`` may be the diagonal matrix or its diagonal. ``beta`` may
    be a vector or a p x m matrix of stacked parameter vectors.
    """
    lam = np.asarray(Lambda1)
    if lam.ndim == 2:
        lam = np.diag(lam)
    f, g = _feedback_complex(M, C, X1, lam, np.asarray(beta, dtype=complex))
    return _to_real(f, "f", tol)[0], _to_real(g, "g", tol)[0]


def _retained_error(system, F, G, tau, partition):
    from .verification import residual_retained

    return residual_retained(system, F, G, tau, partition)


def _check_retained(system, F, G, tau, partition, tol):
    err = _retained_error(system, F, G, tau, partition)
    if err > tol.retained * system.scale():
        raise errors.VerificationFailure(f"retained eigenpairs moved: Error2 = {err:.3e}")
    return err


def assign_single(
    system: QuadraticSystem,
    b,
    partition: SpectrumPartition,
    target: AssignmentTarget,
    *,
    check=True,
    tol: Tolerances = DEFAULT_TOL,
) -> FeedbackSolution:
    """Move the replaced poles to ``target.mu`` with one input channel.

    ``b`` defaults to the single column of ``system.B``. With ``check``
    the retained-eigenpair residual is verified before returning.
    """
    if b is None:
        if system.m != 1:
            raise errors.DimensionMismatch("system has several inputs; pass b explicitly")
        b = system.B[:, 0]
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape != (system.n,):
        raise errors.DimensionMismatch(f"b must have length {system.n}")
    ctrl = controllability_table(partition.X1, b)[:, 0]
    if np.any(ctrl <= tol.controllability):
        raise errors.NotControllable(
            f"mode {int(np.argmin(ctrl))} is not controllable from b (|b^T x| ~ {ctrl.min():.1e})"
        )
    pair = CauchyPair(partition.lambda1, target.mu)
    beta = beta_explicit(pair, target.tau, partition.X1.T @ b)
    f, g = _feedback_complex(system.M, system.C, partition.X1, partition.lambda1, beta)
    f, rf = _to_real(f, "f", tol.realness)
    g, rg = _to_real(g, "g", tol.realness)
    F, G = f[:, None], g[:, None]
    step = StepReport(
        step=1,
        xi=np.array(pair.mus),
        retries=0,
        cond_Z=1.0,
        hadamard_residual=0.0,
        imag_f=rf,
        imag_g=rg,
        controllability=float(ctrl.min()),
    )
    err2 = None
    if check:
        bsys = system if system.m == 1 else QuadraticSystem(system.M, system.C, system.K, b[:, None])
        err2 = _check_retained(bsys, F, G, target.tau, partition, tol)
    return FeedbackSolution(F, G, beta[:, None], "single", (step,), err2)
