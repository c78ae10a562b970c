"""Multi-step assignment for several input channels.

Channel ``k`` moves the replaced poles from the targets of step ``k - 1``
to ``xi[:, k]``. Instead of solving n-order systems for the closed-loop
eigenvectors of the partially fed-back pencil, the p x p matrix

    H_k = U_k + R_k * (G_k H_k)          (``*`` elementwise)

is solved directly; with column stacking this is a p^2-order system whose
matrix ``I - diag(vec R_k) (I_p kron G_k)`` is block diagonal, so it
splits into p independent p x p solves.
"""

from __future__ import annotations

import contextvars
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import errors
from .model import (
    DEFAULT_TOL,
    ETA_POLICIES,
    AssignmentTarget,
    FeedbackSolution,
    QuadraticSystem,
    SpectrumPartition,
    StepReport,
    Tolerances,
    check_distinct,
    conjugate_partners,
)
from .numerics import solve_linear
from .qep import controllability_table
from .single_input import (
    CauchyPair,
    _check_retained,
    _feedback_complex,
    _to_real,
    assign_single,
    beta_explicit,
)

__all__ = [
    "RETRY_SCHEDULE",
    "IntermediateTargets",
    "StepWorkspace",
    "intermediate_targets",
    "check_step_targets",
    "build_step_workspace",
    "solve_step_H",
    "beta_from_H",
    "choose_step",
    "assign_multi",
]

RETRY_SCHEDULE = (0.1, 0.2, 0.3, 0.45)


def default_workers():
    try:
        return max(1, int(os.environ.get("PENCILSHIFT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class IntermediateTargets:
    xi: np.ndarray  # p x m, last column equals mu
    eta: np.ndarray  # p x m


def _eta_base(lambda1, mu, policy):
    if policy not in ETA_POLICIES:
        raise errors.InvalidConfig(f"eta policy must be one of {ETA_POLICIES}")
    lambda1 = np.asarray(lambda1, dtype=complex)
    if policy == "lambda":
        return lambda1.copy()
    if policy == "origin":
        return np.zeros_like(lambda1)
    # lambda_j where the conjugate pairing of lambda1 and mu agree, else 0
    same = conjugate_partners(lambda1) == conjugate_partners(mu)
    return np.where(same, lambda1, 0.0)


def intermediate_targets(lambda1, mu, m, eta_policy="auto", retry=0):
    """Intermediate targets ``xi_jk = eta_jk + (k/m)(mu_j - eta_jk)``.

    Policies: ``"lambda"`` uses ``eta_jk = lambda_j``; ``"origin"`` uses
    ``eta_jk = 0``; ``"auto"`` uses ``lambda_j`` unless that breaks
    conjugate symmetry of the step targets (a complex pair of replaced
    poles sent to two real targets), in which case those rows use 0.
    Retry ``r >= 1`` moves eta towards mu by ``RETRY_SCHEDULE[r - 1]``.
    """
    lambda1 = np.asarray(lambda1, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    eta = _eta_base(lambda1, mu, eta_policy)
    if retry:
        if retry > len(RETRY_SCHEDULE):
            raise errors.InvalidConfig(f"retry index {retry} beyond schedule")
        eta = eta + RETRY_SCHEDULE[retry - 1] * (mu - eta)
    frac = np.arange(1, m + 1) / m
    xi = eta[:, None] + frac[None, :] * (mu - eta)[:, None]
    xi[:, -1] = mu
    return IntermediateTargets(xi, np.repeat(eta[:, None], m, axis=1))


def check_step_targets(xi_col, spectrum, tol: Tolerances = DEFAULT_TOL):
    """Self-conjugate, distinct and away from every open-loop eigenvalue."""
    conjugate_partners(xi_col, tol.conjugate)
    try:
        check_distinct(xi_col, tol.distinct, "step targets")
    except errors.DistinctnessViolation as exc:
        raise errors.TargetCollision(str(exc)) from None
    d = np.abs(np.asarray(xi_col)[:, None] - np.asarray(spectrum)[None, :])
    lim = tol.collision * (1.0 + np.abs(xi_col))[:, None]
    if np.any(d <= lim):
        raise errors.TargetCollision("a step target coincides with an open-loop eigenvalue")


@dataclass
class StepWorkspace:
    """Matrices of one step; ``H``, ``W`` and ``cond_Z`` are set by the solve."""

    step: int
    D: np.ndarray  # diagonal of D_k (targets xi)
    V: np.ndarray
    A: np.ndarray  # diagonal of A_k (x_j^T b_k)
    T: np.ndarray  # diagonal of T_k (exp(-tau xi))
    R: np.ndarray
    G: np.ndarray
    U: np.ndarray
    H: np.ndarray | None = None
    W: np.ndarray | None = None
    cond_Z: float = np.nan
    hadamard_residual: float = np.nan


def build_step_workspace(step, system: QuadraticSystem, partition, xi_col, tau, prior_betas):
    """Assemble step ``step`` (1-based) from the stored earlier parameters.

    ``prior_betas`` is p x (step - 1); ``G_k = X1^T B[:, :k-1] beta^T`` is
    formed at size p x p without touching the n x n feedback.
    """
    xi = np.asarray(xi_col, dtype=complex)
    lam = partition.lambda1
    X1 = partition.X1
    diff = xi[None, :] - lam[:, None]
    if np.any(np.abs(diff) <= DEFAULT_TOL.distinct * (1.0 + np.abs(xi))[None, :]):
        raise errors.DegenerateSpacing("a step target coincides with a replaced eigenvalue")
    V = 1.0 / diff
    A = X1.T @ system.B[:, step - 1]
    T = np.exp(-tau * xi)
    prior = np.asarray(prior_betas, dtype=complex).reshape(partition.p, step - 1)
    G = (X1.T @ system.B[:, : step - 1]) @ prior.T
    return StepWorkspace(step, xi, V, A, T, V * T[None, :], G, A[:, None] * V)


def _block_solve(R, G, U, s):
    Z = np.eye(len(U)) - R[:, s, None] * G
    return solve_linear(Z, U[:, s])


def solve_step_H(ws: StepWorkspace, cond_threshold=DEFAULT_TOL.cond_threshold, max_workers=None):
    """Solve for ``H_k`` one column at a time.

    Column ``s`` satisfies ``(I - diag(R[:, s]) G) H[:, s] = U[:, s]``,
    the s-th diagonal block of the p^2-order system. ``ws.cond_Z`` is the
    largest block condition estimate.

    Raises IllConditionedStep when ``cond_Z > cond_threshold``.
    """
    p = len(ws.D)
    if not np.any(ws.G):
        ws.H, ws.W, ws.cond_Z, ws.hadamard_residual = ws.U.copy(), np.zeros_like(ws.U), 1.0, 0.0
        return ws.H
    workers = default_workers() if max_workers is None else max_workers
    try:
        if workers > 1 and p > 1:
            ctx = contextvars.copy_context()
            with ThreadPoolExecutor(min(workers, p)) as pool:
                futs = [
                    pool.submit(ctx.copy().run, _block_solve, ws.R, ws.G, ws.U, s)
                    for s in range(p)
                ]
                reports = [f.result() for f in futs]
        else:
            reports = [_block_solve(ws.R, ws.G, ws.U, s) for s in range(p)]
    except errors.SingularMatrix:
        ws.cond_Z = np.inf
        raise errors.IllConditionedStep(f"step {ws.step}: Z_k is singular") from None
    ws.cond_Z = max(r.condition_estimate for r in reports)
    if ws.cond_Z > cond_threshold:
        raise errors.IllConditionedStep(f"step {ws.step}: cond(Z_k) = {ws.cond_Z:.2e}")
    H = np.column_stack([r.solution for r in reports])
    ws.H = H
    ws.W = ws.G @ H
    ws.hadamard_residual = float(
        np.linalg.norm(H - ws.U - ws.R * ws.W) / max(np.linalg.norm(H), np.finfo(float).tiny)
    )
    return H


def beta_from_H(H, D, tau):
    """Solve ``beta^T H = [1..1] exp(tau D)``."""
    D = np.asarray(D)
    if D.ndim == 2:
        D = np.diag(D)
    try:
        return solve_linear(np.asarray(H).T, np.exp(tau * D)).solution
    except errors.SingularMatrix:
        raise errors.SingularH("H_k is singular; partial controllability lost") from None


_RETRYABLE = (errors.TargetCollision, errors.DegenerateSpacing, errors.IllConditionedStep)


def choose_step(step, system, partition, target, prior_betas, *, start=0, tol=DEFAULT_TOL,
                max_workers=None):
    """Pick the targets of ``step`` and solve its H, retrying eta on failure.

    Returns ``(workspace, retry_index)``. The last step always aims at
    ``mu`` so it cannot be retried.
    """
    m = system.m
    last = None
    for r in range(start, len(RETRY_SCHEDULE) + 1):
        its = intermediate_targets(partition.lambda1, target.mu, m, target.eta_policy, retry=r)
        xi = its.xi[:, step - 1]
        try:
            check_step_targets(xi, partition.spectrum, tol)
            ws = build_step_workspace(step, system, partition, xi, target.tau, prior_betas)
            solve_step_H(ws, tol.cond_threshold, max_workers)
            return ws, r
        except _RETRYABLE as exc:
            last = exc
            if step == m:
                break
    raise last


def assign_multi(
    system: QuadraticSystem,
    partition: SpectrumPartition,
    target: AssignmentTarget,
    *,
    check=True,
    tol: Tolerances = DEFAULT_TOL,
    max_workers=None,
) -> FeedbackSolution:
    """Assign ``target.mu`` with all ``m`` input channels, one per step.

    No linear system larger than p x p is solved. A single-input system
    is handed to :func:`pencilshift.single_input.assign_single`.
    """
    if system.m == 1:
        return assign_single(system, None, partition, target, check=check, tol=tol)
    p, m = partition.p, system.m
    X1, lam = partition.X1, partition.lambda1
    ctrl = controllability_table(X1, system.B)
    betas = np.zeros((p, m), dtype=complex)
    F = np.zeros((system.n, m))
    G = np.zeros((system.n, m))
    steps = []
    for k in range(1, m + 1):
        if ctrl[:, k - 1].min() <= tol.controllability:
            raise errors.NotControllable(f"channel {k} cannot move mode {int(np.argmin(ctrl[:, k - 1]))}")
        ws, retries = choose_step(k, system, partition, target, betas[:, : k - 1], tol=tol,
                                  max_workers=max_workers)
        if k == 1:
            beta = beta_explicit(CauchyPair(lam, ws.D), target.tau, ws.A)
        else:
            beta = beta_from_H(ws.H, ws.D, target.tau)
        betas[:, k - 1] = beta
        f, g = _feedback_complex(system.M, system.C, X1, lam, beta)
        F[:, k - 1], rf = _to_real(f, f"f_{k}", tol.realness)
        G[:, k - 1], rg = _to_real(g, f"g_{k}", tol.realness)
        steps.append(StepReport(k, ws.D, retries, float(ws.cond_Z), float(ws.hadamard_residual),
                                rf, rg, float(ctrl[:, k - 1].min())))
    err2 = _check_retained(system, F, G, target.tau, partition, tol) if check else None
    return FeedbackSolution(F, G, betas, "fast", tuple(steps), err2)
