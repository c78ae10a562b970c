"""Reference systems: the 3-DOF examples, the spring chain, random draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .model import (
    QuadraticSystem,
    SpectrumPartition,
    build_partition,
    conjugate_partners,
    validate_system,
)

__all__ = [
    "EXAMPLE_TAU",
    "EXAMPLE_REPLACE",
    "EXAMPLE_MU",
    "EXAMPLE1_PRINTED",
    "EXAMPLE2_PRINTED",
    "example1_system",
    "example2_control",
    "example2_system",
    "ChainSpec",
    "chain_system",
    "random_system",
    "random_targets",
]

EXAMPLE_TAU = 0.1
EXAMPLE_REPLACE = (-0.0129 + 1.4389j, -0.0129 - 1.4389j)
EXAMPLE_MU = (-0.2, -0.3)

# 4-decimal reference results for the two 3-DOF examples
EXAMPLE1_PRINTED = {
    "beta": np.array([[-0.3023 + 0.4678j], [-0.3023 - 0.4678j]]),
    "F": np.array([[0.1428], [-0.1541], [0.0215]]),
    "G": np.array([[-0.9698], [1.2224], [-0.1852]]),
    "spectrum": np.array([-0.0129 + 1.4389j, -0.0129 - 1.4389j, -1.3342 + 5.2311j,
                          -1.3342 - 5.2311j, -2.0030 + 4.7437j, -2.0030 - 4.7437j]),
}
EXAMPLE2_PRINTED = {
    "beta": np.array([[-0.3779 + 0.4117j, -0.4108 - 0.3047j],
                      [-0.3779 - 0.4117j, -0.4108 + 0.3047j]]),
    "F": np.array([[0.0220, -0.6561], [-0.0131, 0.7658], [0.0005, -0.1141]]),
    "G": np.array([[-1.0119, -0.2284], [1.2347, 0.0669], [-0.1844, 0.0047]]),
}

_C3 = [[2.5, 2.0, 0.0], [2.0, 1.7, 0.4], [0.0, 0.4, 2.5]]
_K3 = [[16.0, 12.0, 0.0], [12.0, 13.0, 4.0], [0.0, 4.0, 29.0]]


def example1_system():
    """3-DOF system with ``b = (1, 3, 3)^T``; returns ``(system, tau)``."""
    return validate_system(np.eye(3), _C3, _K3, [[1.0], [3.0], [3.0]]), EXAMPLE_TAU


def example2_control():
    return np.array([[1.0, 2.0], [3.0, 2.0], [3.0, 4.0]])


def example2_system():
    """The Example 1 matrices driven by two inputs; returns ``(system, tau)``."""
    return validate_system(np.eye(3), _C3, _K3, example2_control()), EXAMPLE_TAU


@dataclass(frozen=True)
class ChainSpec:
    """Masses in series; element ``i`` links mass ``i-1`` to mass ``i``.

    ``dampers[0]`` and ``springs[0]`` attach the first mass to ground;
    the defaults leave it floating (zero), all other elements are 8 and 150.
    """

    n: int
    masses: tuple | None = None
    dampers: tuple | None = None
    springs: tuple | None = None

    def resolved(self):
        if self.n < 2:
            raise errors.InvalidConfig("chain needs n >= 2")
        n = self.n
        m = np.ones(n) if self.masses is None else np.asarray(self.masses, float)
        c = np.r_[0.0, np.full(n - 1, 8.0)] if self.dampers is None else np.asarray(self.dampers, float)
        k = np.r_[0.0, np.full(n - 1, 150.0)] if self.springs is None else np.asarray(self.springs, float)
        if not (m.shape == c.shape == k.shape == (n,)):
            raise errors.DimensionMismatch("masses, dampers and springs need length n")
        if np.any(m <= 0):
            raise errors.InvalidConfig("masses must be positive")
        return m, c, k


def _chain_matrix(v):
    d = v.copy()
    d[:-1] += v[1:]
    return np.diag(d) - np.diag(v[1:], 1) - np.diag(v[1:], -1)


def chain_system(spec: ChainSpec) -> QuadraticSystem:
    """Tridiagonal chain with the first two masses actuated, ``B = [e1, e2]``."""
    m, c, k = spec.resolved()
    B = np.zeros((spec.n, 2))
    B[0, 0] = B[1, 1] = 1.0
    return validate_system(np.diag(m), _chain_matrix(c), _chain_matrix(k), B)


def _pick_self_conjugate(values, p):
    """First p eigenvalues (canonical order) forming a conjugation-closed set."""
    perm = conjugate_partners(values)
    chosen, i = [], 0
    while len(chosen) < p and i < len(values):
        j = int(perm[i])
        if i in chosen:
            i += 1
            continue
        group = [i] if j == i else [i, j]
        if len(chosen) + len(group) <= p:
            chosen.extend(group)
        i += 1
    return chosen if len(chosen) == p else None


def random_system(seed, n, m, p, max_tries=20):
    """Seeded random symmetric system and a p-pole partition.

    ``M = L^T L + n I``; ``C`` and ``K`` are symmetric Gaussian. Draws
    whose spectrum is not simple, or that cannot supply a conjugation
    closed set of p poles, are redrawn.

    Returns ``(system, partition)``.
    """
    from .qep import open_loop_spectrum

    if not (2 <= n <= 64 and 1 <= m <= 4 and 1 <= p <= min(6, 2 * n - 1)):
        raise errors.InvalidConfig("need 2 <= n <= 64, 1 <= m <= 4, 1 <= p <= min(6, 2n - 1)")
    if m > n:
        raise errors.InvalidConfig("need m <= n")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        L = rng.standard_normal((n, n))
        C = rng.standard_normal((n, n))
        K = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        try:
            system = validate_system(L.T @ L + n * np.eye(n), C + C.T, K + K.T, B)
            eig = open_loop_spectrum(system)
        except (errors.DefectivePencil, errors.RankDeficientB):
            continue
        idx = _pick_self_conjugate(eig.values, p)
        if idx is None:
            continue
        try:
            part = build_partition(eig, eig.values[idx])
        except errors.ValidationError:
            continue
        return system, part
    raise errors.GenerationRetryExhausted(f"no usable draw after {max_tries} tries")


def random_targets(seed, partition: SpectrumPartition, *, mirror=True, min_gap=0.1,
                   max_tries=200):
    """Seeded self-conjugate target poles in the left half plane.

    With ``mirror`` the targets copy the conjugate structure of
    ``lambda1`` (pairs for pairs, reals for reals); otherwise every target
    is real.
    """
    rng = np.random.default_rng(seed)
    lam = partition.lambda1
    perm = conjugate_partners(lam)
    spec = partition.spectrum
    for _ in range(max_tries):
        mu = np.empty(len(lam), dtype=complex)
        for i, j in enumerate(perm):
            if mirror and j != i:
                if i < j:
                    z = complex(-rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0))
                    mu[i], mu[j] = z, np.conj(z)
            else:
                mu[i] = -rng.uniform(0.3, 3.0)
        gaps = np.abs(mu[:, None] - spec[None, :])
        own = np.abs(mu[:, None] - mu[None, :])
        np.fill_diagonal(own, np.inf)
        if gaps.min() > min_gap and own.min() > min_gap:
            return mu
    raise errors.GenerationRetryExhausted("could not place separated targets")
