import numpy as np
import pytest

from pencilshift import errors
from pencilshift.bench import chain_problem, rows_to_csv, run_bench
from pencilshift.model import build_partition
from pencilshift.qep import open_loop_spectrum


@pytest.fixture(scope="module")
def chain500():
    return chain_problem(500)


def test_chain_problem_selects_the_unstable_pole(chain500):
    _, eig, part, target = chain500
    assert part.p == 1
    assert part.lambda1[0].real >= 0 and abs(part.lambda1[0]) < 1e-5
    assert np.all(part.lambda2.real < 0)
    np.testing.assert_array_equal(target.mu, [-0.2])


def test_small_chain_coincident_zero_pair():
    # roundoff barely splits the double zero for short chains
    sysm, eig, part, _ = chain_problem(100)
    with pytest.raises(errors.DefectivePencil):
        open_loop_spectrum(sysm)
    with pytest.raises(errors.DistinctnessViolation):
        build_partition(eig, "auto-unstable")
    assert part.p == 1


def test_bench_rows(chain500):
    rows = run_bench([500], "both", repeats=1, problems={500: chain500})
    fast, base = rows
    assert (fast.method, base.method) == ("fast", "baseline")
    # both methods leave the same retained residual, to 2 significant figures
    assert f"{fast.error2:.1e}" == f"{base.error2:.1e}"
    # reference n = 500 value: Error2 = 4.5030e-09; ours is below that
    assert fast.error2 <= 10 * 4.5030e-09
    assert fast.error1 < 1e-9 and base.error1 < 1e-9
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "n,method,cpu_seconds,error1,error2"
    assert len(text.splitlines()) == 3


def test_bench_method_validation():
    with pytest.raises(errors.InvalidConfig):
        run_bench([500], "sideways")
    with pytest.raises(errors.InvalidConfig):
        run_bench([20], "fast")
