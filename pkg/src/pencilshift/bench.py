"""Timing harness on the spring chain: fast vs baseline multi-input assignment."""

from __future__ import annotations

import csv
import dataclasses
import io
import time
from dataclasses import dataclass

import numpy as np

from . import errors
from .baseline import assign_multi_baseline
from .model import DEFAULT_TOL, build_partition, make_target
from .multi_input import assign_multi
from .qep import open_loop_spectrum
from .systems import ChainSpec, chain_system
from .verification import residual_assigned, residual_retained, closed_loop_vectors

__all__ = [
    "BenchRow",
    "CHAIN_TARGET",
    "CHAIN_TAU",
    "COINCIDENT_TOL",
    "chain_problem",
    "run_bench",
    "rows_to_csv",
]

CHAIN_TARGET = -0.2
CHAIN_TAU = 0.1
SIZE_RANGE = (100, 5000)
CSV_HEADER = ("n", "method", "cpu_seconds", "error1", "error2")

# The floating chain has a defective double eigenvalue at 0 that roundoff
# splits into a tiny +/- pair (1e-14 to 1e-7 depending on n). Only exact
# coincidence is rejected so the unstable half can be moved.
COINCIDENT_TOL = dataclasses.replace(DEFAULT_TOL, distinct=0.0)

_METHODS = {"fast": assign_multi, "baseline": assign_multi_baseline}


@dataclass(frozen=True)
class BenchRow:
    n: int
    method: str
    cpu_seconds: float
    error1: float
    error2: float


def chain_problem(n, eig=None):
    """Chain system, spectrum, partition (the unstable pole) and target.

    Returns ``(system, eig, partition, target)``; pass ``eig`` to reuse an
    already computed spectrum.
    """
    system = chain_system(ChainSpec(n))
    if eig is None:
        eig = open_loop_spectrum(system, check_distinct=False)
    part = build_partition(eig, "auto-unstable", tol=COINCIDENT_TOL)
    target = make_target(part, [CHAIN_TARGET] * part.p, CHAIN_TAU)
    return system, eig, part, target


def _time(fn, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run_bench(sizes, method="both", repeats=3, problems=None):
    """One row per (n, method).

    The spectrum is computed once per ``n`` and excluded from the timing,
    as are the residual checks; ``cpu_seconds`` is the best elapsed time
    over ``repeats`` runs of the assignment itself.

    ``problems`` may map ``n`` to a precomputed :func:`chain_problem` tuple.
    """
    if method not in ("fast", "baseline", "both"):
        raise errors.InvalidConfig(f"unknown bench method {method!r}")
    names = ("fast", "baseline") if method == "both" else (method,)
    rows = []
    for n in sizes:
        n = int(n)
        if not SIZE_RANGE[0] <= n <= SIZE_RANGE[1]:
            raise errors.InvalidConfig(f"bench sizes must lie in {SIZE_RANGE}, got {n}")
        system, _, part, target = (problems or {}).get(n) or chain_problem(n)
        for name in names:
            fn = _METHODS[name]
            secs, sol = _time(lambda: fn(system, part, target, check=False), repeats)
            Y1 = closed_loop_vectors(system, sol.F, sol.G, target.tau, target.mu)
            rows.append(BenchRow(
                n, name, secs,
                residual_assigned(system, sol.F, sol.G, target.tau, target.mu, Y1),
                residual_retained(system, sol.F, sol.G, target.tau, part),
            ))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.n, r.method, f"{r.cpu_seconds:.6g}", f"{r.error1:.6e}", f"{r.error2:.6e}"])
    return buf.getvalue()
