"""Problem data: the second-order system, the spectrum split, targets and
the feedback result.

All containers are frozen dataclasses whose arrays are marked read-only,
so a validated object can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import errors

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "QuadraticSystem",
    "SpectrumPartition",
    "AssignmentTarget",
    "StepReport",
    "FeedbackSolution",
    "validate_system",
    "build_partition",
    "make_target",
    "conjugate_partners",
    "canonical_order",
    "check_distinct",
    "ETA_POLICIES",
]

ETA_POLICIES = ("auto", "lambda", "origin")


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across the package."""

    symmetry: float = 1e-12  # relative asymmetry repaired by averaging
    rank: float = 1e-10  # sigma_m(B) > rank * sigma_1(B)
    distinct: float = 1e-8  # |a - b| > distinct * (1 + max(|a|, |b|))
    match: float = 1e-4  # selector matching, relative to 1 + |lambda|
    conjugate: float = 1e-10  # pairing of conjugate partners
    controllability: float = 1e-10  # |b^T x| / (|b| |x|)
    realness: float = 1e-8  # |Im f| <= realness * |f|
    collision: float = 1e-8  # intermediate targets vs. open-loop spectrum
    cond_threshold: float = 1e10  # cond(Z_k) above this triggers a retry
    retained: float = 1e-8  # Error2 <= retained * (|M| + |C| + |K|)


DEFAULT_TOL = Tolerances()


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadraticSystem:
    """Symmetric second-order system ``M x'' + C x' + K x = B u``."""

    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    B: np.ndarray

    @property
    def n(self):
        return self.M.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def scale(self):
        """``|M| + |C| + |K|`` in the spectral norm."""
        return sum(np.linalg.norm(A, 2) for A in (self.M, self.C, self.K))

    def pencil(self, lam):
        """Open-loop ``P(lam) = lam^2 M + lam C + K``."""
        return lam * lam * self.M + lam * self.C + self.K

    def delayed_pencil(self, lam, F, G, tau):
        """Closed-loop ``P_tau(lam)`` for real feedback ``F, G`` (n x m)."""
        F = np.reshape(F, (self.n, -1))
        G = np.reshape(G, (self.n, -1))
        fb = self.B @ (lam * F + G).T * np.exp(-lam * tau)
        return self.pencil(lam) - fb


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise errors.DimensionMismatch(f"{name} must be a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise errors.DimensionMismatch(f"{name} has non-finite entries")
    return a


def _symmetrized(a, name, tol):
    asym = np.linalg.norm(a - a.T)
    if asym == 0.0:
        return a
    if asym > tol * np.linalg.norm(a):
        raise errors.NotSymmetric(f"{name} is not symmetric (|A - A^T|_F = {asym:.3e})")
    return 0.5 * (a + a.T)


def validate_system(M, C, K, B, tol: Tolerances = DEFAULT_TOL) -> QuadraticSystem:
    """Check and freeze system data.

    Tiny asymmetry (relative Frobenius norm at most ``tol.symmetry``) is
    removed by averaging with the transpose; anything larger is rejected.

    Raises
    ------
    DimensionMismatch, NotSymmetric, NotPositiveDefinite, RankDeficientB
    """
    M, C, K, B = (_as_matrix(a, nm) for a, nm in zip((M, C, K, B), "MCKB"))
    n = M.shape[0]
    for a, nm in ((M, "M"), (C, "C"), (K, "K")):
        if a.shape != (n, n):
            raise errors.DimensionMismatch(f"{nm} has shape {a.shape}, expected ({n}, {n})")
    if B.shape[0] != n:
        raise errors.DimensionMismatch(f"B has {B.shape[0]} rows, expected {n}")
    if B.shape[1] == 0 or B.shape[1] > n:
        raise errors.DimensionMismatch(f"B must have between 1 and {n} columns")
    M, C, K = (_symmetrized(a, nm, tol.symmetry) for a, nm in ((M, "M"), (C, "C"), (K, "K")))
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise errors.NotPositiveDefinite("M is not positive definite") from None
    sv = np.linalg.svd(B, compute_uv=False)
    if not sv[-1] > tol.rank * sv[0]:
        raise errors.RankDeficientB(
            f"B does not have full column rank (sigma_min/sigma_max = {sv[-1] / sv[0]:.3e})"
        )
    return QuadraticSystem(_frozen(M), _frozen(C), _frozen(K), _frozen(B))


# -- spectrum helpers ---------------------------------------------------------
def canonical_order(values):
    """Indices sorting by (Re ascending, |Im| ascending, Im > 0 first)."""
    values = np.asarray(values)
    return np.lexsort((values.imag <= 0, np.abs(values.imag), values.real))


def conjugate_partners(values, tol=DEFAULT_TOL.conjugate):
    """Return ``perm`` with ``values[perm] ~= conj(values)``.

    Real entries are their own partner. Raises NonSelfConjugateSelection
    when the multiset is not closed under conjugation.
    """
    values = np.asarray(values, dtype=complex)
    p = len(values)
    perm = np.full(p, -1)
    for i in range(p):
        if perm[i] >= 0:
            continue
        v = values[i]
        thr = tol * (1.0 + abs(v))
        if abs(v.imag) <= thr:
            perm[i] = i
            continue
        dist = np.abs(values - np.conj(v))
        dist[perm >= 0] = np.inf
        dist[i] = np.inf
        j = int(np.argmin(dist)) if p > 1 else i
        if j == i or dist[j] > thr:
            raise errors.NonSelfConjugateSelection(f"{v} has no conjugate partner in the set")
        perm[i], perm[j] = j, i
    return perm


def check_distinct(values, tol=DEFAULT_TOL.distinct, what="values"):
    values = np.asarray(values, dtype=complex)
    for i in range(len(values)):
        d = np.abs(values[i + 1 :] - values[i])
        lim = tol * (1.0 + np.maximum(np.abs(values[i + 1 :]), abs(values[i])))
        hit = np.nonzero(d <= lim)[0]
        if hit.size:
            j = i + 1 + hit[0]
            raise errors.DistinctnessViolation(
                f"{what} {values[i]} and {values[j]} are not distinct"
            )


def _separated(a, b, tol):
    """True when every entry of ``a`` is away from every entry of ``b``."""
    a = np.asarray(a, dtype=complex)[:, None]
    b = np.asarray(b, dtype=complex)[None, :]
    return np.all(np.abs(a - b) > tol * (1.0 + np.maximum(np.abs(a), np.abs(b))))


# -- partition ----------------------------------------------------------------
@dataclass(frozen=True)
class SpectrumPartition:
    """Open-loop eigenpairs split into replaced (1) and retained (2) sets."""

    lambda1: np.ndarray
    X1: np.ndarray
    lambda2: np.ndarray
    X2: np.ndarray

    @property
    def p(self):
        return len(self.lambda1)

    @property
    def spectrum(self):
        return np.concatenate([self.lambda1, self.lambda2])


def _match(values, wanted, tol):
    """Nearest-neighbour match of each wanted value, ties to lower index."""
    idx = []
    for w in wanted:
        d = np.abs(values - w)
        d[idx] = np.inf
        j = int(np.argmin(d))  # argmin returns the first minimum
        if d[j] > tol * (1.0 + abs(values[j])):
            raise errors.TargetNotInSpectrum(f"{w} is not an open-loop eigenvalue")
        idx.append(j)
    return idx


def build_partition(
    eig, selector, *, threshold=0.0, tol: Tolerances = DEFAULT_TOL
) -> SpectrumPartition:
    """Split an eigenpair set into the poles to move and the ones to keep.

    Parameters
    ----------
    eig : EigenpairSet
        Full open-loop spectrum (``values`` length 2n, ``vectors`` n x 2n),
        in canonical order.
    selector : sequence of complex or ``"auto-unstable"``
        Explicit self-conjugate list of eigenvalues to replace (matched to
        the computed ones, order preserved), or the rule selecting every
        eigenvalue with ``Re >= -threshold``.
    threshold : float
        Only used by ``"auto-unstable"``.
    """
    values = np.asarray(eig.values)
    vectors = np.asarray(eig.vectors)
    if isinstance(selector, str):
        if selector != "auto-unstable":
            raise errors.InvalidConfig(f"unknown selector {selector!r}")
        idx = [int(i) for i in np.nonzero(values.real >= -threshold)[0]]
        if idx:
            # pull in partners so the selection stays closed under conjugation
            perm = conjugate_partners(values, tol.conjugate)
            idx = sorted(set(idx) | {int(perm[i]) for i in idx})
    else:
        wanted = np.atleast_1d(np.asarray(selector, dtype=complex))
        conjugate_partners(wanted, tol.match)
        idx = _match(values, wanted, tol.match)
    if not idx:
        raise errors.TargetNotInSpectrum("selection is empty")
    if len(idx) >= len(values):
        raise errors.DimensionMismatch("cannot replace the whole spectrum (need p < 2n)")
    lambda1 = values[idx]
    conjugate_partners(lambda1, tol.conjugate)
    rest = np.setdiff1d(np.arange(len(values)), idx)
    lambda2 = values[rest]
    check_distinct(lambda1, tol.distinct, "replaced eigenvalues")
    if not _separated(lambda1, lambda2, tol.distinct):
        raise errors.DistinctnessViolation("replaced and retained eigenvalues overlap")
    return SpectrumPartition(
        _frozen(lambda1), _frozen(vectors[:, idx]), _frozen(lambda2), _frozen(vectors[:, rest])
    )


# -- targets ------------------------------------------------------------------
@dataclass(frozen=True)
class AssignmentTarget:
    """Delay, desired poles and the rule for intermediate targets.

    ``eta_policy`` is one of ``"auto"``, ``"lambda"`` or ``"origin"``; see
    :func:`pencilshift.multi_input.intermediate_targets`.
    """

    tau: float
    mu: np.ndarray
    eta_policy: str = "auto"


def make_target(
    partition: SpectrumPartition,
    mu: Sequence[complex],
    tau: float,
    eta_policy: str = "auto",
    tol: Tolerances = DEFAULT_TOL,
) -> AssignmentTarget:
    """Validate desired poles against the partition.

    Raises
    ------
    DimensionMismatch, NonSelfConjugateSelection, DistinctnessViolation,
    TargetCollision, InvalidConfig
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    if mu.ndim != 1 or len(mu) != partition.p:
        raise errors.DimensionMismatch(f"need {partition.p} target poles, got {mu.size}")
    if not np.isfinite(tau) or tau < 0:
        raise errors.InvalidConfig(f"delay must be a nonnegative real, got {tau}")
    if eta_policy not in ETA_POLICIES:
        raise errors.InvalidConfig(f"eta policy must be one of {ETA_POLICIES}")
    perm = conjugate_partners(mu, tol.conjugate)
    # snap conjugate partners to exact conjugates so F, G come out real
    mu = mu.copy()
    for i, j in enumerate(perm):
        if i == j:
            mu[i] = mu[i].real
        elif i < j:
            mu[j] = np.conj(mu[i])
    check_distinct(mu, tol.distinct, "target poles")
    # same tolerance that recognizes a typed value as an eigenvalue
    if not _separated(mu, partition.spectrum, tol.match):
        raise errors.TargetCollision("a target pole coincides with an open-loop eigenvalue")
    return AssignmentTarget(float(tau), _frozen(mu), eta_policy)


# -- solution -----------------------------------------------------------------
@dataclass(frozen=True)
class StepReport:
    """Per-input-channel diagnostics of one assignment step."""

    step: int
    xi: np.ndarray
    retries: int
    cond_Z: float
    hadamard_residual: float
    imag_f: float
    imag_g: float
    controllability: float


@dataclass(frozen=True)
class FeedbackSolution:
    """Real feedback gains ``F`` (velocity) and ``G`` (displacement)."""

    F: np.ndarray
    G: np.ndarray
    beta: np.ndarray
    method: str
    steps: tuple = field(default_factory=tuple)
    error2: float | None = None

    @property
    def imag_residue(self):
        return max((max(s.imag_f, s.imag_g) for s in self.steps), default=0.0)
