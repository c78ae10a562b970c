import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pencilshift import errors
from pencilshift.model import build_partition, make_target
from pencilshift.qep import open_loop_spectrum
from pencilshift.single_input import (
    CauchyPair,
    assign_single,
    beta_cauchy_sum,
    beta_explicit,
    beta_product_form,
    cauchy_inverse_entries,
    cauchy_matrix,
    feedback_from_beta,
    interpolation_sum,
)
from pencilshift.systems import EXAMPLE1_PRINTED, example2_system, random_system, random_targets
from pencilshift.verification import residual_retained


def self_conjugate(rng, p, lo=0.3, hi=3.0):
    """p values closed under conjugation, pairs first."""
    npairs = int(rng.integers(0, p // 2 + 1))
    out = []
    for _ in range(npairs):
        z = complex(rng.uniform(-hi, -lo), rng.uniform(lo, hi))
        out += [z, np.conj(z)]
    out += list(rng.uniform(-hi, hi, p - 2 * npairs))
    return np.array(out, dtype=complex)


def separated_pair(seed, p, gap=0.15):
    rng = np.random.default_rng(seed)
    while True:
        lam, mu = self_conjugate(rng, p), self_conjugate(rng, p)
        allv = np.concatenate([lam, mu])
        d = np.abs(allv[:, None] - allv[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() > gap:
            return CauchyPair(lam, mu)


seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(1, 6)


def test_cauchy_inverse_p1():
    pair = CauchyPair([-1.0], [-0.2])
    assert cauchy_matrix(pair)[0, 0] == pytest.approx(1.25)
    np.testing.assert_allclose(cauchy_inverse_entries(pair), [[0.8]])


def test_cauchy_inverse_p2():
    pair = CauchyPair([-1.0, -2.0], [-0.2, -0.3])
    T = cauchy_inverse_entries(pair)
    np.testing.assert_allclose(T @ cauchy_matrix(pair), np.eye(2), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, sizes)
def test_cauchy_inverse_property(seed, p):
    pair = separated_pair(seed, p)
    T = cauchy_inverse_entries(pair)
    assert np.abs(T @ cauchy_matrix(pair) - np.eye(p)).max() < 1e-10


@settings(max_examples=60, deadline=None)
@given(seeds, sizes)
def test_interpolation_identity(seed, p):
    pair = separated_pair(seed, p)
    for j in range(p):
        assert abs(interpolation_sum(pair, j) - 1.0) < 1e-10


@pytest.mark.parametrize(
    "lam, mu",
    [
        ([-1.0, -1.0], [-0.2, -0.3]),
        ([-1.0, -2.0], [-0.2, -0.2]),
        ([-1.0, -2.0], [-1.0, -0.3]),
    ],
)
def test_degenerate_spacing(lam, mu):
    with pytest.raises(errors.DegenerateSpacing):
        CauchyPair(lam, mu)


def test_beta_p1():
    pair = CauchyPair([-1.0], [-0.2])
    assert beta_explicit(pair, 0.0, [2.0])[0] == pytest.approx(0.4)
    assert beta_explicit(pair, 0.1, [2.0])[0] == pytest.approx(0.4 * np.exp(-0.02))


@settings(max_examples=60, deadline=None)
@given(seeds, sizes)
def test_undelayed_product_form_matches_general(seed, p):
    pair = separated_pair(seed, p)
    btx = np.random.default_rng(seed).standard_normal(p) + 2.0
    a = beta_product_form(pair, btx)
    b = beta_cauchy_sum(pair, 0.0, btx)
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


@settings(max_examples=60, deadline=None)
@given(seeds, sizes, st.sampled_from([0.0, 0.1, 0.5]))
def test_beta_solves_linear_system(seed, p, tau):
    # beta^T diag(btx) Hhat = exp(tau mu)
    pair = separated_pair(seed, p)
    btx = np.random.default_rng(seed).standard_normal(p) + 1j
    beta = beta_explicit(pair, tau, btx)
    lhs = beta @ (btx[:, None] * cauchy_matrix(pair))
    np.testing.assert_allclose(lhs, np.exp(tau * pair.mus), rtol=1e-9, atol=1e-9)


def test_beta_not_controllable():
    pair = CauchyPair([-1.0, -2.0], [-0.2, -0.3])
    with pytest.raises(errors.NotControllable):
        beta_explicit(pair, 0.1, [1.0, 0.0])
    with pytest.raises(errors.DimensionMismatch):
        beta_explicit(pair, 0.1, [1.0])


def test_example1_end_to_end(example1):
    sysm, _, part, target = example1
    sol = assign_single(sysm, None, part, target)
    ref = EXAMPLE1_PRINTED
    assert np.abs(sol.beta - ref["beta"]).max() <= 5e-4
    assert np.abs(sol.F - ref["F"]).max() <= 5e-4
    assert np.abs(sol.G - ref["G"]).max() <= 5e-4
    assert sol.error2 <= 1e-10


def test_feedback_zero_beta(example1):
    sysm, _, part, _ = example1
    f, g = feedback_from_beta(sysm.M, sysm.C, part.X1, part.lambda1, np.zeros(2))
    assert not f.any() and not g.any()


def test_feedback_rejects_non_conjugate_beta(example1):
    sysm, _, part, _ = example1
    with pytest.raises(errors.ImaginaryResidue):
        feedback_from_beta(sysm.M, sysm.C, part.X1, part.lambda1, np.array([1.0, 2.0j]))


@pytest.mark.parametrize("seed", range(8))
def test_rescaling_eigenvectors_leaves_gains_unchanged(seed):
    sysm, part = random_system(seed, 8, 1, 4)
    mu = random_targets(seed, part)
    target = make_target(part, mu, 0.1)
    rng = np.random.default_rng(seed)
    scale = np.empty(part.p, dtype=complex)
    lam = part.lambda1
    for j in range(part.p):
        partner = np.argmin(np.abs(lam - np.conj(lam[j])))
        if partner > j or partner == j:
            s = rng.uniform(0.2, 5.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            scale[j] = s.real if partner == j else s
            if partner != j:
                scale[partner] = np.conj(s)
    X1s = part.X1 * scale
    base = assign_single(sysm, None, part, target)
    b = sysm.B[:, 0]
    beta = beta_explicit(CauchyPair(lam, target.mu), 0.1, X1s.T @ b)
    f, g = feedback_from_beta(sysm.M, sysm.C, X1s, lam, beta)
    assert np.linalg.norm(f - base.F[:, 0]) <= 1e-10 * np.linalg.norm(base.F)
    assert np.linalg.norm(g - base.G[:, 0]) <= 1e-10 * np.linalg.norm(base.G)


def test_assign_single_explicit_column():
    sysm, _ = example2_system()
    eig = open_loop_spectrum(sysm)
    part = build_partition(eig, eig.values[4:])
    target = make_target(part, [-0.2, -0.3], 0.1)
    with pytest.raises(errors.DimensionMismatch):
        assign_single(sysm, None, part, target)
    sol = assign_single(sysm, sysm.B[:, 1], part, target)
    bsys = type(sysm)(sysm.M, sysm.C, sysm.K, sysm.B[:, 1:])
    assert residual_retained(bsys, sol.F, sol.G, 0.1, part) < 1e-10


def test_assign_single_not_controllable():
    sysm, _ = random_system(0, 6, 1, 2)
    eig = open_loop_spectrum(sysm)
    part = build_partition(eig, eig.values[:2] if eig.values[0].imag else eig.values[:1])
    x = part.X1[:, 0]
    # real b with b^T x = 0 for the first replaced eigenvector
    b = np.linalg.svd(np.vstack([x.real, x.imag]))[2][-1]
    target = make_target(part, -np.arange(1, part.p + 1) * 0.5, 0.0)
    with pytest.raises(errors.NotControllable):
        assign_single(sysm, b, part, target)
