"""Command-line interface.

Subcommands::

    maxplus-dre bench stiff    --n 10 --k 5 --t1 0 --t2 10 --M 1 --N 10 --nrk 10 --method a
    maxplus-dre bench doubling --problem configs/benchmark_2x2.json --T 4 --m-min 3 --m-max 17
    maxplus-dre demo tan       --T 3 --steps 60
    maxplus-dre solve          --problem prob.json --t2 4 --method c --M 13

Exit codes: 0 on success, 2 on invalid input, 3 when a propagation fails.
"""

import argparse
import csv
import json
import sys
from contextlib import contextmanager

import numpy as np

from .bench import (
    CSV_COLUMNS,
    StiffBenchSpec,
    run_doubling_sweep,
    run_stiff_bench,
    solve_with,
    tan_demo,
    truth_solve,
)
from .errors import DreError
from .semiconvex import DualityKernel
from .time_invariant import TiProblem

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3


class InputError(ValueError):
    """Malformed command-line input or problem file."""


def _matrix(value, n, name, symmetric=False):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and arr.size == n * n:
        arr = arr.reshape(n, n)
    if arr.shape != (n, n):
        raise InputError(f"{name} must be {n}x{n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    if symmetric and np.linalg.norm(arr - arr.T) > 1e-12 * (1 + np.linalg.norm(arr)):
        raise InputError(f"{name} is not symmetric")
    return arr


def load_problem(path):
    """Read a problem file.

    Returns
    -------
    problem : TiProblem
    phi0 : DualityKernel or None
    p0 : ndarray or None
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read problem file {path}: {exc}") from exc
    try:
        n = int(doc["n"])
        A = _matrix(doc["A"], n, "A")
        C = _matrix(doc["C"], n, "C", symmetric=True)
        Sigma = _matrix(doc["Sigma"], n, "Sigma", symmetric=True)
    except KeyError as exc:
        raise InputError(f"problem file is missing field {exc}") from exc
    try:
        problem = TiProblem(A, C, Sigma, relax_psd=bool(doc.get("relax_psd", False)),
                            descriptor=str(doc.get("name", path)))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    phi0 = None
    if "phi0" in doc:
        ph = doc["phi0"]
        phi0 = DualityKernel(
            _matrix(ph["P"], n, "phi0.P", True),
            _matrix(ph["S"], n, "phi0.S"),
            _matrix(ph["Q"], n, "phi0.Q", True),
        )
    p0 = _matrix(doc["p0"], n, "p0", True) if "p0" in doc else None
    return problem, phi0, p0


def load_matrix(path, n):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read matrix file {path}: {exc}") from exc
    if isinstance(doc, dict):
        doc = doc.get("p0", doc.get("p"))
    return _matrix(doc, n, "p0", symmetric=True)


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def write_records(records, path):
    with _output(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.as_row())


def _cmd_bench_stiff(args):
    spec = StiffBenchSpec(args.n, args.k, args.t1, args.t2, args.M, args.N, args.nrk,
                          args.seed, args.method.upper())
    rec = run_stiff_bench(spec)
    write_records([rec], args.out)
    return EXIT_OK


def _cmd_bench_doubling(args):
    problem, phi0, p0 = load_problem(args.problem)
    if p0 is None:
        p0 = np.zeros((problem.n, problem.n))
    if args.m_min > args.m_max or args.m_min < 0:
        raise InputError("need 0 <= m-min <= m-max")
    truth = truth_solve(problem, p0, args.T)
    recs = run_doubling_sweep(problem, p0, phi0, args.T, range(args.m_min, args.m_max + 1),
                              truth, Nrk=args.nrk)
    write_records(recs, args.out)
    return EXIT_OK


def _cmd_demo_tan(args):
    samples = tan_demo(args.T, args.steps)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "p_computed", "p_true", "rel_err"))
        for s in samples:
            w.writerow((repr(s.t), repr(s.p_computed), repr(s.p_true),
                        repr(abs(s.p_computed - s.p_true) / abs(s.p_true))))
    return EXIT_OK


def _cmd_solve(args):
    problem, phi0, p0 = load_problem(args.problem)
    if args.p0 is not None:
        p0 = load_matrix(args.p0, problem.n)
    if p0 is None:
        raise InputError("no initial condition: pass --p0 or put p0 in the problem file")
    if args.t2 < args.t1:
        raise InputError("need t1 <= t2")
    p = solve_with(args.method, problem, p0, args.t2 - args.t1, args.M, args.N, args.nrk,
                   phi0, args.steps, strict=False if args.no_strict else None)
    with _output(args.out) as fh:
        json.dump({"t": -(args.t2 - args.t1), "p": p.tolist()}, fh)
        fh.write("\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maxplus-dre",
        description="Max-plus fundamental solutions and doubling algorithms for Riccati equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run benchmarks").add_subparsers(dest="bench", required=True)

    st = bench.add_parser("stiff", help="stiff family with closed-form truth")
    st.add_argument("--n", type=int, default=10)
    st.add_argument("--k", type=float, default=5.0)
    st.add_argument("--t1", type=float, default=0.0)
    st.add_argument("--t2", type=float, default=10.0)
    st.add_argument("--M", type=int, default=1)
    st.add_argument("--N", type=int, default=10)
    st.add_argument("--nrk", type=int, default=10, help="RK4 seed steps, 0 for analytic seed")
    st.add_argument("--method", choices=("a", "b", "c", "A", "B", "C"), default="a")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--out", default=None)
    st.set_defaults(func=_cmd_bench_stiff)

    db = bench.add_parser("doubling", help="error versus doubling count for methods A, B, C")
    db.add_argument("--problem", required=True)
    db.add_argument("--T", type=float, default=4.0)
    db.add_argument("--m-min", type=int, default=3)
    db.add_argument("--m-max", type=int, default=17)
    db.add_argument("--nrk", type=int, default=1)
    db.add_argument("--out", default=None)
    db.set_defaults(func=_cmd_bench_doubling)

    demo = sub.add_parser("demo", help="demonstrations").add_subparsers(dest="demo", required=True)
    tan = demo.add_parser("tan", help="propagate tan across its poles")
    tan.add_argument("--T", type=float, default=3.0)
    tan.add_argument("--steps", type=int, default=60)
    tan.add_argument("--out", default=None)
    tan.set_defaults(func=_cmd_demo_tan)

    sv = sub.add_parser("solve", help="solve one problem backward from t2 to t1")
    sv.add_argument("--problem", required=True)
    sv.add_argument("--p0", default=None)
    sv.add_argument("--t1", type=float, default=0.0)
    sv.add_argument("--t2", type=float, required=True)
    sv.add_argument("--method", default="c",
                    choices=("rk", "dm", "a", "b", "c", "leipnik", "rusnak"))
    sv.add_argument("--M", type=int, default=10)
    sv.add_argument("--N", type=int, default=1)
    sv.add_argument("--nrk", type=int, default=1)
    sv.add_argument("--steps", type=int, default=1000, help="RK4 steps for --method rk")
    sv.add_argument("--no-strict", action="store_true",
                    help="skip the definiteness checks of methods a and b")
    sv.add_argument("--out", default=None)
    sv.set_defaults(func=_cmd_solve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DreError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
