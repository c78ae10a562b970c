"""Command line entry point: ``pencilshift {spectrum,assign,verify,bench,demo}``.

Exit statuses: 0 success, 2 invalid input, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import errors
from .baseline import assign_multi_baseline
from .bench import COINCIDENT_TOL, chain_problem, rows_to_csv, run_bench
from .fileio import parse_complex_list, read_matrix, write_matrix
from .model import (
    DEFAULT_TOL,
    ETA_POLICIES,
    build_partition,
    make_target,
    validate_system,
)
from .multi_input import assign_multi
from .qep import _check_distinct, open_loop_spectrum, orthogonality_diagnostics
from .single_input import assign_single
from .systems import (
    EXAMPLE1_PRINTED,
    EXAMPLE2_PRINTED,
    EXAMPLE_MU,
    EXAMPLE_REPLACE,
    ChainSpec,
    chain_system,
    example1_system,
    example2_system,
)
from .verification import verify_solution

__all__ = ["main", "build_parser"]

NEAR_ZERO = 1e-5
# verify passes when both residuals are below this multiple of the system scale
VERIFY_REL = 1e-8
CERT_LIMIT = 1e-6


# -- serialization --------------------------------------------------------------
def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _clist(v):
    return [_c(z) for z in np.ravel(v)]


def _emit(obj, as_json, text_lines=()):
    if as_json:
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _fmt(z):
    z = complex(z)
    return f"{z.real:+.6e}{z.imag:+.6e}i"


# -- system loading ---------------------------------------------------------------
def _load_system(args):
    """System from ``--system`` preset or the four matrix files."""
    files = (args.mass, args.damping, args.stiffness, args.control)
    if args.system:
        if any(files):
            raise errors.InvalidConfig("use either --system or matrix files, not both")
        if args.system == "example1":
            return example1_system()[0]
        if args.system == "example2":
            return example2_system()[0]
        return chain_system(ChainSpec(args.n))
    if not all(files):
        raise errors.InvalidConfig("need --mass, --damping, --stiffness and --control")
    return validate_system(*(read_matrix(f) for f in files))


def _selector(text):
    if text is None or text.strip() == "auto-unstable":
        return "auto-unstable"
    return parse_complex_list(text)


def _problem(args, system, timings):
    loose = getattr(args, "allow_coincident", False)
    t0 = time.perf_counter()
    eig = open_loop_spectrum(system, method=args.solver, check_distinct=not loose)
    timings["spectrum"] = time.perf_counter() - t0
    part = build_partition(eig, _selector(args.replace), tol=COINCIDENT_TOL if loose else DEFAULT_TOL)
    if args.targets is None:
        raise errors.InvalidConfig("--targets is required")
    target = make_target(part, parse_complex_list(args.targets), args.tau, args.eta)
    return eig, part, target


def _config(args):
    keys = ("system", "n", "mass", "damping", "stiffness", "control", "tau", "replace",
            "targets", "eta", "method", "solver")
    return {k: getattr(args, k, None) for k in keys}


# -- commands -------------------------------------------------------------------------
def cmd_spectrum(args):
    system = _load_system(args)
    eig = open_loop_spectrum(system, method=args.solver, check_distinct=False)
    vals = eig.values
    try:
        _check_distinct(vals, DEFAULT_TOL.distinct)
        distinct = True
    except errors.DefectivePencil:
        distinct = False
    near = np.nonzero(np.abs(vals) < NEAR_ZERO)[0]
    unstable = np.nonzero(vals.real >= 0)[0]
    report = {
        "config": _config(args),
        "n": system.n,
        "eigenvalues": _clist(vals),
        "near_zero": [int(i) for i in near],
        "unstable": [int(i) for i in unstable],
        "max_residual": float(eig.residuals(system).max()),
        "distinct": distinct,
    }
    if args.orthogonality:
        report["orthogonality_offdiag_rel"] = list(orthogonality_diagnostics(eig, system).offdiag_rel)
    lines = [f"{i:5d}  {_fmt(z)}" + ("  near-zero" if i in near else "")
             + ("  unstable" if i in unstable else "") for i, z in enumerate(vals)]
    if not distinct:
        lines.append("warning: some eigenvalues coincide to working precision")
    _emit(report, args.json, lines)
    return 0


def _solve(args, system, part, target):
    if system.m == 1:
        return assign_single(system, None, part, target)
    if args.method == "baseline":
        return assign_multi_baseline(system, part, target)
    return assign_multi(system, part, target)


def cmd_assign(args):
    timings = {}
    system = _load_system(args)
    eig, part, target = _problem(args, system, timings)
    t0 = time.perf_counter()
    sol = _solve(args, system, part, target)
    timings["assign"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = verify_solution(system, sol.F, sol.G, target.tau, part, target.mu,
                          realness_residue=sol.imag_residue)
    timings["verify"] = time.perf_counter() - t0
    report = {
        "config": _config(args),
        "spectrum": _clist(eig.values),
        "replaced": _clist(part.lambda1),
        "targets": _clist(target.mu),
        "method": sol.method,
        "F": sol.F.tolist(),
        "G": sol.G.tolist(),
        "beta": [_clist(col) for col in sol.beta.T],
        "steps": [{"step": s.step, "xi": _clist(s.xi), "retries": s.retries,
                   "cond_Z": s.cond_Z} for s in sol.steps],
        "verification": rep.as_dict(),
        "timings": timings,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_matrix(out / "F.mtx", sol.F)
        write_matrix(out / "G.mtx", sol.G)
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    lines = [f"method {sol.method}, replaced {len(part.lambda1)} poles"]
    lines += [f"F[:, {k}] = {np.array2string(sol.F[:, k], precision=4)}" for k in range(system.m)]
    lines += [f"G[:, {k}] = {np.array2string(sol.G[:, k], precision=4)}" for k in range(system.m)]
    lines += [f"Error1 = {rep.error1:.4e}", f"Error2 = {rep.error2:.4e}"]
    _emit(report, args.json, lines)
    return 0


def _read_gain(path, n):
    A = read_matrix(path)
    if A.shape[0] != n:
        A = A.T
    if A.shape[0] != n:
        raise errors.DimensionMismatch(f"{path} does not have {n} rows")
    return A


def cmd_verify(args):
    system = _load_system(args)
    loose = args.allow_coincident
    eig = open_loop_spectrum(system, method=args.solver, check_distinct=not loose)
    part = build_partition(eig, _selector(args.replace), tol=COINCIDENT_TOL if loose else DEFAULT_TOL)
    if args.targets is None:
        raise errors.InvalidConfig("--targets is required")
    mu = parse_complex_list(args.targets)
    F = _read_gain(args.feedback_f, system.n)
    G = _read_gain(args.feedback_g, system.n)
    if F.shape != G.shape or F.shape[1] != system.m:
        raise errors.DimensionMismatch("F and G must both be n x m")
    probes = parse_complex_list(args.probe) if args.probe else ()
    rep = verify_solution(system, F, G, args.tau, part, mu, probes=probes, vectors=args.vectors)
    limit = VERIFY_REL * system.scale()
    ok = rep.error1 <= limit and rep.error2 <= limit and np.all(rep.sigma_min_ratio < CERT_LIMIT)
    report = {"config": _config(args), "verification": rep.as_dict(), "limit": limit, "ok": bool(ok)}
    lines = [f"Error1 = {rep.error1:.4e}", f"Error2 = {rep.error2:.4e}",
             f"sigma_min/sigma_max at targets = {np.array2string(rep.sigma_min_ratio, precision=3)}",
             "PASS" if ok else "FAIL"]
    _emit(report, args.json, lines)
    if not ok:
        raise errors.VerificationFailure(f"residuals exceed {limit:.2e} or a target is not a pole")
    return 0


def cmd_bench(args):
    sizes = [int(s) for s in args.sizes.replace(",", " ").split()]
    rows = run_bench(sizes, args.method, repeats=args.repeats)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


_DEMO_TOL = 5e-4


def _close(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _demo_example(num):
    system, tau = (example1_system, example2_system)[num - 1]()
    eig = open_loop_spectrum(system)
    part = build_partition(eig, EXAMPLE_REPLACE)
    target = make_target(part, EXAMPLE_MU, tau)
    sol = assign_multi(system, part, target)
    rep = verify_solution(system, sol.F, sol.G, tau, part, target.mu)
    ref = EXAMPLE1_PRINTED if num == 1 else EXAMPLE2_PRINTED
    dev = max(_close(sol.beta, ref["beta"]), _close(sol.F, ref["F"]), _close(sol.G, ref["G"]))
    e1, e2 = (1e-12, 1e-10) if num == 1 else (1e-10, 1e-8)
    checks = {"values_match": bool(dev <= _DEMO_TOL), "error1": bool(rep.error1 <= e1),
              "error2": bool(rep.error2 <= e2),
              "certificates": bool(np.all(rep.sigma_min_ratio < CERT_LIMIT))}
    return {"name": f"example{num}", "max_deviation": dev, "error1": rep.error1,
            "error2": rep.error2, "checks": checks, "pass": all(checks.values())}


def _demo_chain(n=500):
    problem = chain_problem(n)
    part = problem[2]
    rows = run_bench([n], "both", repeats=1, problems={n: problem})
    checks = {"one_unstable_pole": bool(part.p == 1 and abs(part.lambda1[0]) < NEAR_ZERO)}
    for r in rows:
        checks[f"{r.method}_error1"] = bool(r.error1 < 1e-9)
        checks[f"{r.method}_error2"] = bool(r.error2 < 1e-6)
    return {"name": f"chain{n}", "replaced": _clist(part.lambda1),
            "rows": [r.__dict__ for r in rows], "checks": checks, "pass": all(checks.values())}


def cmd_demo(args):
    results = [_demo_example(1), _demo_example(2), _demo_chain()]
    ok = all(r["pass"] for r in results)
    lines = []
    for r in results:
        for name, passed in r["checks"].items():
            lines.append(f"{'PASS' if passed else 'FAIL'}  {r['name']}: {name}")
    _emit({"results": results, "pass": ok}, args.json, lines)
    return 0 if ok else errors.VerificationFailure.exit_status


# -- parser -------------------------------------------------------------------------
def _add_system_args(p):
    g = p.add_argument_group("system")
    g.add_argument("--system", choices=("example1", "example2", "chain"),
                   help="built-in system instead of matrix files")
    g.add_argument("--n", type=int, default=500, help="chain length for --system chain")
    g.add_argument("--mass", help="Matrix Market file for M")
    g.add_argument("--damping", help="Matrix Market file for C")
    g.add_argument("--stiffness", help="Matrix Market file for K")
    g.add_argument("--control", help="Matrix Market file for B (n x m)")
    g.add_argument("--solver", choices=("auto", "qz", "cholesky"), default="auto",
                   help="open-loop eigensolver")


def _add_problem_args(p):
    p.add_argument("--tau", type=float, default=0.0, help="feedback delay")
    p.add_argument("--allow-coincident", action="store_true",
                   help="accept eigenvalues that agree to working precision (e.g. the floating chain)")
    p.add_argument("--replace", default="auto-unstable",
                   help='poles to move, e.g. "-0.0129+1.4389i,-0.0129-1.4389i", or auto-unstable')
    p.add_argument("--targets", help='new poles, e.g. "-0.2,-0.3" or "(re,im) (re,im)"')


def build_parser():
    parser = argparse.ArgumentParser(prog="pencilshift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="open-loop eigenvalues")
    _add_system_args(p)
    p.add_argument("--orthogonality", action="store_true", help="also report D1-D3 diagnostics")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("assign", help="compute feedback gains F, G")
    _add_system_args(p)
    _add_problem_args(p)
    p.add_argument("--eta", choices=ETA_POLICIES, default="auto",
                   help="intermediate-target rule for several inputs")
    p.add_argument("--method", choices=("fast", "baseline"), default="fast")
    p.add_argument("--out", help="directory for F.mtx, G.mtx and report.json")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("verify", help="check given gains against the closed loop")
    _add_system_args(p)
    _add_problem_args(p)
    p.add_argument("--feedback-f", required=True, help="Matrix Market file for F")
    p.add_argument("--feedback-g", required=True, help="Matrix Market file for G")
    p.add_argument("--probe", help="extra points where the pencil should stay regular")
    p.add_argument("--vectors", choices=("null", "construction"), default="null",
                   help="eigenvectors used for Error1")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="chain timing table as CSV")
    p.add_argument("--sizes", default="500,1000,2000")
    p.add_argument("--method", choices=("fast", "baseline", "both"), default="both")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="also write the CSV here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("demo", help="reproduce the reference examples with pass/fail lines")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except errors.PencilShiftError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
