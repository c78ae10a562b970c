import numpy as np
import pytest

from pencilshift import errors
from pencilshift.model import conjugate_partners
from pencilshift.systems import (
    ChainSpec,
    chain_system,
    example1_system,
    example2_system,
    random_system,
    random_targets,
)


def test_examples_share_matrices():
    a, tau_a = example1_system()
    b, tau_b = example2_system()
    np.testing.assert_array_equal(a.K, b.K)
    assert tau_a == tau_b == 0.1
    assert a.m == 1 and b.m == 2


def test_chain_structure():
    sysm = chain_system(ChainSpec(5))
    assert sysm.K[0, 0] == 150 and sysm.K[1, 1] == 300 and sysm.K[4, 4] == 150
    assert sysm.C[0, 1] == -8
    np.testing.assert_allclose(sysm.K @ np.ones(5), 0)  # floating chain
    np.testing.assert_array_equal(sysm.B, np.eye(5)[:, :2])


def test_chain_custom_and_invalid():
    sysm = chain_system(ChainSpec(3, masses=(1, 2, 3), dampers=(1, 1, 1), springs=(5, 5, 5)))
    assert sysm.M[2, 2] == 3 and sysm.K[0, 0] == 10
    with pytest.raises(errors.InvalidConfig):
        ChainSpec(1).resolved()
    with pytest.raises(errors.DimensionMismatch):
        ChainSpec(3, masses=(1, 2)).resolved()


@pytest.mark.parametrize("seed", range(5))
def test_random_system_is_reproducible(seed):
    a, pa = random_system(seed, 7, 2, 3)
    b, pb = random_system(seed, 7, 2, 3)
    np.testing.assert_array_equal(a.K, b.K)
    np.testing.assert_array_equal(pa.lambda1, pb.lambda1)
    assert pa.p == 3
    conjugate_partners(pa.lambda1)


def test_random_system_bounds():
    with pytest.raises(errors.InvalidConfig):
        random_system(0, 100, 1, 1)
    with pytest.raises(errors.InvalidConfig):
        random_system(0, 3, 4, 1)


@pytest.mark.parametrize("mirror", [True, False])
def test_random_targets(mirror):
    _, part = random_system(4, 8, 1, 4)
    mu = random_targets(4, part, mirror=mirror)
    conjugate_partners(mu)
    assert np.all(mu.real < 0)
    if not mirror:
        assert not np.any(mu.imag)
    gaps = np.abs(mu[:, None] - part.spectrum[None, :])
    assert gaps.min() > 0.1
