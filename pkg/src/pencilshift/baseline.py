"""Reference multi-step method that solves p n-order systems per step.

Used as an independent oracle for :mod:`pencilshift.multi_input` and as
the slow side of the benchmark. Each step forms the closed-loop
eigenvectors ``Y_k`` explicitly and then ``H_k`` from them.
"""

from __future__ import annotations

import contextvars
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import errors
from .model import DEFAULT_TOL, FeedbackSolution, StepReport, Tolerances
from .multi_input import RETRY_SCHEDULE, beta_from_H, choose_step, default_workers
from .numerics import real_matmul, solve_linear
from .qep import controllability_table
from .single_input import _check_retained, _feedback_complex, _to_real

__all__ = ["StepEigvecs", "solve_step_eigvecs", "H_from_Y", "assign_multi_baseline"]


@dataclass(frozen=True)
class StepEigvecs:
    Y: np.ndarray
    residuals: np.ndarray


def _shifted_solve(system, Bp, Fp, Gp, xi, tau, b):
    A = system.pencil(xi) - Bp @ (xi * Fp + Gp).T * np.exp(-xi * tau)
    try:
        rep = solve_linear(A, b.astype(complex))
    except errors.SingularMatrix:
        raise errors.SingularShiftedPencil(f"shifted pencil singular at {xi}") from None
    scale = np.linalg.norm(A, 1) * np.linalg.norm(rep.solution) + np.linalg.norm(b)
    return rep.solution, rep.residual_norm / scale


def solve_step_eigvecs(step, system, prior_F, prior_G, xi_col, tau, max_workers=None):
    """Solve ``(xi^2 M + xi C_k(xi) + K_k(xi)) y = b_k`` for each target.

    ``C_k(xi) = C - sum_{i<k} b_i f_i^T e^{-xi tau}`` and likewise for
    ``K_k``; one dense factorization per target, no reuse.
    """
    k = step
    Bp = system.B[:, : k - 1]
    Fp = np.reshape(prior_F, (system.n, -1))[:, : k - 1]
    Gp = np.reshape(prior_G, (system.n, -1))[:, : k - 1]
    b = system.B[:, k - 1]
    xi = np.asarray(xi_col, dtype=complex)
    workers = default_workers() if max_workers is None else max_workers
    if workers > 1 and len(xi) > 1:
        ctx = contextvars.copy_context()
        with ThreadPoolExecutor(min(workers, len(xi))) as pool:
            futs = [pool.submit(ctx.copy().run, _shifted_solve, system, Bp, Fp, Gp, z, tau, b)
                    for z in xi]
            out = [f.result() for f in futs]
    else:
        out = [_shifted_solve(system, Bp, Fp, Gp, z, tau, b) for z in xi]
    return StepEigvecs(np.column_stack([y for y, _ in out]), np.array([r for _, r in out]))


def H_from_Y(X1, Lambda1, M, C, Y, D):
    """``H = X1^T M Y D + Lambda1 X1^T M Y + X1^T C Y``."""
    lam = np.asarray(Lambda1)
    if lam.ndim == 2:
        lam = np.diag(lam)
    d = np.asarray(D)
    if d.ndim == 2:
        d = np.diag(d)
    XMY = real_matmul(M, X1).T @ Y
    return XMY * d[None, :] + lam[:, None] * XMY + real_matmul(C, X1).T @ Y


def assign_multi_baseline(system, partition, target, *, check=True,
                          tol: Tolerances = DEFAULT_TOL, max_workers=None):
    """Same steps and targets as the fast method; ``H_k`` comes from ``Y_k``.

    Costs ``m * p`` dense n-order solves.
    """
    p, m, n = partition.p, system.m, system.n
    X1, lam = partition.X1, partition.lambda1
    ctrl = controllability_table(X1, system.B)
    betas = np.zeros((p, m), dtype=complex)
    F = np.zeros((n, m))
    G = np.zeros((n, m))
    steps = []
    for k in range(1, m + 1):
        if ctrl[:, k - 1].min() <= tol.controllability:
            raise errors.NotControllable(f"channel {k} cannot move mode {int(np.argmin(ctrl[:, k - 1]))}")
        start = 0
        while True:
            ws, r = choose_step(k, system, partition, target, betas[:, : k - 1], start=start,
                                tol=tol, max_workers=max_workers)
            try:
                ev = solve_step_eigvecs(k, system, F, G, ws.D, target.tau, max_workers)
                break
            except errors.SingularShiftedPencil:
                if k == m or r >= len(RETRY_SCHEDULE):
                    raise
                start = r + 1
        H = H_from_Y(X1, lam, system.M, system.C, ev.Y, ws.D)
        beta = beta_from_H(H, ws.D, target.tau)
        betas[:, k - 1] = beta
        f, g = _feedback_complex(system.M, system.C, X1, lam, beta)
        F[:, k - 1], rf = _to_real(f, f"f_{k}", tol.realness)
        G[:, k - 1], rg = _to_real(g, f"g_{k}", tol.realness)
        hres = float(np.linalg.norm(H - ws.U - ws.R * (ws.G @ H)) / np.linalg.norm(H))
        steps.append(StepReport(k, ws.D, r, float(ws.cond_Z), hres, rf, rg,
                                float(ctrl[:, k - 1].min())))
    err2 = _check_retained(system, F, G, target.tau, partition, tol) if check else None
    return FeedbackSolution(F, G, betas, "baseline", tuple(steps), err2)
