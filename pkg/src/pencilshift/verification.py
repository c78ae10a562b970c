"""Closed-loop residual metrics and pole certificates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import QuadraticSystem, SpectrumPartition
from .numerics import real_matmul, singular_value_ratio, smallest_singular_pair, solve_linear
from .qep import controllability_table

__all__ = [
    "VerificationReport",
    "closed_loop_residual",
    "residual_assigned",
    "residual_retained",
    "closed_loop_vectors",
    "closed_loop_null_vectors",
    "assigned_pole_certificate",
    "verify_solution",
]


def closed_loop_residual(system: QuadraticSystem, F, G, tau, values, vectors):
    """Frobenius norm of ``M Y S^2 + C Y S + K Y - B (F^T Y S + G^T Y) e^{-tau S}``.

    ``S = diag(values)``; columns of ``vectors`` are the candidate
    eigenvectors of the delayed closed-loop pencil.
    """
    s = np.asarray(values, dtype=complex)
    Y = np.asarray(vectors, dtype=complex)
    F = np.reshape(F, (system.n, -1))
    G = np.reshape(G, (system.n, -1))
    R = real_matmul(system.M, Y) * s**2 + real_matmul(system.C, Y) * s
    R += real_matmul(system.K, Y)
    fb = (real_matmul(F.T, Y) * s + real_matmul(G.T, Y)) * np.exp(-tau * s)
    R -= real_matmul(system.B, fb)
    return float(np.linalg.norm(R))


def residual_assigned(system, F, G, tau, mu, Y1):
    """Residual of the assigned pairs ``(mu_j, y_j)`` (Error1)."""
    return closed_loop_residual(system, F, G, tau, mu, Y1)


def residual_retained(system, F, G, tau, partition: SpectrumPartition):
    """Residual of the retained open-loop pairs under feedback (Error2)."""
    return closed_loop_residual(system, F, G, tau, partition.lambda2, partition.X2)


def closed_loop_vectors(system: QuadraticSystem, F, G, tau, mu):
    """Eigenvectors certified by the construction for each target ``mu_j``.

    Solves ``(mu^2 M + mu C_m(mu) + K_m(mu)) y = b_m`` where ``C_m, K_m``
    carry the delayed feedback of the first ``m - 1`` channels; for a
    single input this is ``(mu^2 M + mu C + K) y = b``.
    """
    F = np.reshape(F, (system.n, -1))
    G = np.reshape(G, (system.n, -1))
    m = system.m
    Bp, Fp, Gp = system.B[:, : m - 1], F[:, : m - 1], G[:, : m - 1]
    b = system.B[:, m - 1]
    cols = []
    for z in np.asarray(mu, dtype=complex):
        A = system.pencil(z) - Bp @ (z * Fp + Gp).T * np.exp(-z * tau)
        cols.append(solve_linear(A, b.astype(complex)).solution)
    return np.column_stack(cols)


def closed_loop_null_vectors(system: QuadraticSystem, F, G, tau, mu):
    """Unit right singular vectors of ``P_tau(mu_j)`` for the smallest singular value.

    Needs no knowledge of how ``F, G`` were built; costs one SVD per target.
    """
    return np.column_stack(
        [smallest_singular_pair(system.delayed_pencil(z, F, G, tau))[1]
         for z in np.asarray(mu, dtype=complex)]
    )


def assigned_pole_certificate(system: QuadraticSystem, F, G, tau, mu):
    """``sigma_min / sigma_max`` of ``P_tau(mu_j)`` for each target."""
    return np.array(
        [singular_value_ratio(system.delayed_pencil(z, F, G, tau)) for z in np.atleast_1d(mu)]
    )


@dataclass(frozen=True)
class VerificationReport:
    error1: float
    error2: float
    sigma_min_ratio: np.ndarray
    realness_residue: float
    controllability_min: float
    probe_ratio: np.ndarray

    def as_dict(self):
        return {
            "error1": self.error1,
            "error2": self.error2,
            "sigma_min_ratio": [float(r) for r in self.sigma_min_ratio],
            "realness_residue": self.realness_residue,
            "controllability_min": self.controllability_min,
            "probe_ratio": [float(r) for r in self.probe_ratio],
        }


def verify_solution(system, F, G, tau, partition, mu, probes=(), realness_residue=0.0,
                    vectors="construction"):
    """Run every check against a candidate feedback pair.

    ``vectors`` picks the eigenvectors behind Error1: ``"construction"``
    solves the n-order system the assignment certifies, ``"null"`` uses
    the smallest singular vector of the delayed pencil.
    """
    if vectors == "construction":
        Y1 = closed_loop_vectors(system, F, G, tau, mu)
    elif vectors == "null":
        Y1 = closed_loop_null_vectors(system, F, G, tau, mu)
    else:
        raise ValueError(f"unknown vectors option {vectors!r}")
    return VerificationReport(
        error1=residual_assigned(system, F, G, tau, mu, Y1),
        error2=residual_retained(system, F, G, tau, partition),
        sigma_min_ratio=assigned_pole_certificate(system, F, G, tau, mu),
        realness_residue=float(realness_residue),
        controllability_min=float(controllability_table(partition.X1, system.B).min()),
        probe_ratio=assigned_pole_certificate(system, F, G, tau, probes)
        if len(probes)
        else np.zeros(0),
    )
