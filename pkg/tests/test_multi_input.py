import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pencilshift import errors, multi_input
from pencilshift.model import DEFAULT_TOL, make_target
from pencilshift.multi_input import (
    RETRY_SCHEDULE,
    assign_multi,
    beta_from_H,
    build_step_workspace,
    choose_step,
    intermediate_targets,
    solve_step_H,
)
from pencilshift.numerics import record_solves
from pencilshift.single_input import assign_single
from pencilshift.systems import EXAMPLE2_PRINTED, random_system, random_targets


def test_intermediate_targets_formula():
    lam = np.array([-1 + 2j, -1 - 2j, 0.5])
    mu = np.array([-2 + 1j, -2 - 1j, -3.0])
    its = intermediate_targets(lam, mu, 3, "lambda")
    for k in (1, 2):
        np.testing.assert_allclose(its.xi[:, k - 1], lam + k / 3 * (mu - lam))
    np.testing.assert_array_equal(its.xi[:, -1], mu)
    its = intermediate_targets(lam, mu, 2, "origin")
    np.testing.assert_allclose(its.xi[:, 0], mu / 2)


def test_intermediate_targets_auto_falls_back_per_row():
    lam = np.array([-0.01 + 1.4j, -0.01 - 1.4j, -5.0])
    mu = np.array([-0.2, -0.3, -6.0])
    its = intermediate_targets(lam, mu, 2, "auto")
    np.testing.assert_allclose(its.eta[:, 0], [0, 0, -5.0])


def test_intermediate_targets_retry_moves_eta():
    lam = np.array([-1.0])
    mu = np.array([-3.0])
    its = intermediate_targets(lam, mu, 2, "lambda", retry=2)
    np.testing.assert_allclose(its.eta[0, 0], -1.0 + RETRY_SCHEDULE[1] * (-2.0))
    with pytest.raises(errors.InvalidConfig):
        intermediate_targets(lam, mu, 2, "lambda", retry=len(RETRY_SCHEDULE) + 1)
    with pytest.raises(errors.InvalidConfig):
        intermediate_targets(lam, mu, 2, "sideways")


def test_example2_matches_printed(example2):
    sysm, _, part, target = example2
    sol = assign_multi(sysm, part, target)
    ref = EXAMPLE2_PRINTED
    assert np.abs(sol.beta - ref["beta"]).max() <= 5e-4
    assert np.abs(sol.F - ref["F"]).max() <= 5e-4
    assert np.abs(sol.G - ref["G"]).max() <= 5e-4
    assert sol.error2 <= 1e-8
    assert [s.retries for s in sol.steps] == [0, 0]


def test_example2_with_lambda_eta_breaks_conjugacy(example2):
    # complex pair lambda_1,2 sent to two real poles: lambda-based
    # intermediate targets are not closed under conjugation
    sysm, _, part, _ = example2
    target = make_target(part, [-0.2, -0.3], 0.1, eta_policy="lambda")
    with pytest.raises(errors.NonSelfConjugateSelection):
        assign_multi(sysm, part, target)


def _kron_solve(ws):
    p = len(ws.D)
    Z = np.eye(p * p) - np.diag(ws.R.flatten(order="F")) @ np.kron(np.eye(p), ws.G)
    return np.linalg.solve(Z, ws.U.flatten(order="F")).reshape((p, p), order="F")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.sampled_from([0.0, 0.1]))
def test_block_solve_matches_kronecker_system(seed, p, tau):
    sysm, part = random_system(seed, 8, 2, p)
    mu = random_targets(seed, part)
    target = make_target(part, mu, tau)
    its = intermediate_targets(part.lambda1, target.mu, 2)
    prior = np.random.default_rng(seed).standard_normal((p, 1)) * (1 + 1j)
    try:
        ws = build_step_workspace(2, sysm, part, its.xi[:, 1], tau, prior)
        H = solve_step_H(ws)
    except errors.PencilShiftError:
        return
    np.testing.assert_allclose(H, _kron_solve(ws), rtol=1e-8, atol=1e-10 * np.abs(H).max())
    assert ws.hadamard_residual < 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_G_matches_feedback_projection(seed):
    # G_k = X1^T B_{<k} beta_{<k}^T; the n x m feedback never enters
    sysm, part = random_system(seed, 9, 3, 3)
    rng = np.random.default_rng(seed)
    betas = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    xi = -np.arange(1, 4) * 0.7
    ws = build_step_workspace(3, sysm, part, xi, 0.1, betas)
    brute = np.zeros((3, 3), dtype=complex)
    for i in range(2):
        for r in range(3):
            for c in range(3):
                brute[r, c] += (part.X1[:, r] @ sysm.B[:, i]) * betas[c, i]
    np.testing.assert_allclose(ws.G, brute, rtol=1e-12)


def test_first_step_short_circuits(example2):
    sysm, _, part, target = example2
    ws = build_step_workspace(1, sysm, part, [-0.1, -0.15], 0.1, np.zeros((2, 0)))
    H = solve_step_H(ws)
    np.testing.assert_array_equal(H, ws.U)
    assert ws.cond_Z == 1.0


def test_ill_conditioned_step(example2):
    sysm, _, part, target = example2
    ws = build_step_workspace(2, sysm, part, [-0.2, -0.3], 0.1, np.ones((2, 1)))
    with pytest.raises(errors.IllConditionedStep):
        solve_step_H(ws, cond_threshold=1.0 - 1e-9)


def test_beta_from_H_singular():
    with pytest.raises(errors.SingularH):
        beta_from_H(np.zeros((2, 2)), [-0.2, -0.3], 0.1)
    H = np.array([[2.0, 0.0], [0.0, 4.0]])
    np.testing.assert_allclose(beta_from_H(H, [0.0, 0.0], 0.1), [0.5, 0.25])


def test_choose_step_retries(example2, monkeypatch):
    sysm, _, part, target = example2
    real = multi_input.check_step_targets
    calls = []

    def flaky(xi, spectrum, tol=DEFAULT_TOL):
        calls.append(xi)
        if len(calls) == 1:
            raise errors.TargetCollision("forced")
        return real(xi, spectrum, tol)

    monkeypatch.setattr(multi_input, "check_step_targets", flaky)
    ws, r = choose_step(1, sysm, part, target, np.zeros((2, 0)))
    assert r == 1
    its = intermediate_targets(part.lambda1, target.mu, 2, "auto", retry=1)
    np.testing.assert_allclose(ws.D, its.xi[:, 0])


def test_last_step_is_not_retried(example2, monkeypatch):
    sysm, _, part, target = example2

    def always(xi, spectrum, tol=DEFAULT_TOL):
        raise errors.TargetCollision("forced")

    monkeypatch.setattr(multi_input, "check_step_targets", always)
    with pytest.raises(errors.TargetCollision):
        choose_step(2, sysm, part, target, np.ones((2, 1)))


def test_single_input_delegates(example1):
    sysm, _, part, target = example1
    a = assign_multi(sysm, part, target)
    b = assign_single(sysm, None, part, target)
    np.testing.assert_array_equal(a.F, b.F)
    np.testing.assert_array_equal(a.G, b.G)


@pytest.mark.parametrize("seed", range(10))
def test_no_solve_larger_than_p(seed):
    sysm, part = random_system(seed, 12, 3, 4)
    target = make_target(part, random_targets(seed, part), 0.1)
    with record_solves() as dims:
        try:
            assign_multi(sysm, part, target, check=False)
        except errors.IllConditionedStep:
            pass
    assert dims and max(dims) <= part.p


def test_not_controllable_channel(example2):
    sysm, _, part, target = example2
    B = np.array(sysm.B)
    x = part.X1[:, 0]
    B[:, 1] = np.linalg.svd(np.vstack([x.real, x.imag]))[2][-1]
    bad = dataclasses.replace(sysm, B=B)
    with pytest.raises(errors.NotControllable):
        assign_multi(bad, part, target)


def test_threads_give_same_answer(monkeypatch):
    sysm, part = random_system(11, 10, 3, 4)
    target = make_target(part, random_targets(11, part), 0.1)
    one = assign_multi(sysm, part, target, max_workers=1)
    monkeypatch.setenv("PENCILSHIFT_THREADS", "4")
    assert multi_input.default_workers() == 4
    four = assign_multi(sysm, part, target)
    np.testing.assert_allclose(four.F, one.F, rtol=1e-13)
    np.testing.assert_allclose(four.G, one.G, rtol=1e-13)
