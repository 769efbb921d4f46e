"""Command-line front end: ``generate``, ``solve``, ``bench``, ``verify``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or input
error.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import io
import os
import sys

import numpy as np

from . import checks
from .baselines import BaselineConfig, run_baseline
from .centroids import CentroidMapping
from .instance import (
    GeneratorSpec,
    Instance,
    InstanceFormatError,
    generate,
    incidence_instance,
    load_instance,
    save_instance,
)
from .iterate import check_optimality
from .oracle import (
    MAX_BRUTE_N,
    MAX_CIRCUIT_DIM,
    brute_force_optimum,
    enumerate_circuits,
    verify_contraction,
    verify_proximity_many,
)
from .solver import SolverConfig, solve
from .updates import UpdateContractError, UpdateRule

__all__ = ["main", "build_parser", "BenchPlan", "run_bench", "run_verify"]

RAW_COLUMNS = [
    "cell_id", "m", "n", "capacitated", "feasibility", "method", "mapping",
    "run", "seed", "status", "objective", "major_cycles", "minor_cycles",
    "wall_ms",
]
AGG_COLUMNS = [
    "cell_id", "m", "n", "capacitated", "feasibility", "method", "mapping",
    "runs", "mean_objective", "mean_major_cycles", "mean_minor_cycles",
    "mean_wall_ms", "timeouts",
]
SHAPES = {"rect": "rectangular", "rectangular": "rectangular",
          "near-square": "near-square", "square": "near-square"}
BASELINES = ("pg", "pfg", "fw", "afw")


class UsageError(Exception):
    pass


# -- shared helpers ---------------------------------------------------------


def _shape(value):
    try:
        return SHAPES[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            "shape must be one of %s" % ", ".join(sorted(SHAPES)))


def _default_n(shape, m):
    return 2 * m if shape == "rectangular" else int(round(1.05 * m))


def _resolve_start(start, rule_kind):
    # "auto": framework PG/FW begin inside the box, coordinate at the origin
    if start == "auto":
        return "zero" if rule_kind == "coordinate" else "interior"
    return start


def _solve_method(inst, method, mapping, args, start="auto", record=False):
    """Run a framework rule or, with ``method="baseline:<name>"``, a
    baseline. Returns a SolveReport."""
    if method.startswith("baseline:"):
        return run_baseline(inst, BaselineConfig(
            method=method.split(":", 1)[1],
            time_limit=args.time_limit,
            record_trace=record))
    rule = UpdateRule(method)
    cfg = SolverConfig(
        rule=rule,
        mapping=CentroidMapping(mapping),
        start=_resolve_start(start, rule.kind),
        opt_tol=args.opt_tol,
        snap_tol=args.snap_tol,
        time_limit=args.time_limit,
        record_points=record,
    )
    return solve(inst, cfg)


def _threads():
    raw = os.environ.get("MNP_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise UsageError("MNP_THREADS must be a positive integer, got %r" % raw)
    if k < 1:
        raise UsageError("MNP_THREADS must be a positive integer, got %r" % raw)
    return k


# -- generate ---------------------------------------------------------------


def cmd_generate(args, out):
    n = args.n if args.n is not None else _default_n(args.shape, args.m)
    try:
        spec = GeneratorSpec(args.shape, args.m, n, capacitated=args.capacitated,
                             feasibility=args.feasible, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    inst = generate(spec)
    save_instance(inst, args.output)
    print("wrote %s (m=%d, n=%d)" % (args.output, inst.m, inst.n), file=out)
    return 0


# -- solve ------------------------------------------------------------------


def _write_trace(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "cycle_kind", "major_index", "objective_after",
                    "size_I0", "size_I1", "size_J", "alpha_star", "moved"])
        for i, ev in enumerate(report.trace):
            sizes = ev.partition_sizes or ("", "", "")
            w.writerow([i, ev.cycle_kind, ev.major_index,
                        "%.17g" % ev.objective_after, *sizes,
                        "" if ev.alpha_star is None else "%.17g" % ev.alpha_star,
                        int(ev.moved)])


def cmd_solve(args, out):
    inst = load_instance(args.instance)
    if args.baseline:
        method = "baseline:" + args.baseline
    else:
        method = args.rule
    report = _solve_method(inst, method, args.mapping, args, start=args.start,
                           record=bool(args.trace))
    print("status: %s" % report.status, file=out)
    print("objective: %.17g" % report.objective, file=out)
    print("major_cycles: %d" % report.major_cycles, file=out)
    print("minor_cycles: %d" % report.minor_cycles_total, file=out)
    print("wall_time_s: %.3f" % report.wall_time, file=out)
    if args.trace:
        _write_trace(report, args.trace)
    return 0


# -- bench ------------------------------------------------------------------


class BenchPlan:
    """
    Grid of cells times methods times runs.

    `cells` holds ``(shape, m, n, capacitated, feasibility)`` tuples and
    `methods` ``(method, mapping)`` pairs, where `method` is an update rule
    name or ``"baseline:<name>"``. Every method in a cell sees the same
    instance for a given run.
    """

    def __init__(self, cells, methods, runs=5, seed=0, start="auto"):
        if not cells:
            raise UsageError("bench plan has no cells")
        if not methods:
            raise UsageError("bench plan has no methods")
        if runs < 1:
            raise UsageError("runs must be positive")
        self.cells = list(cells)
        self.methods = list(methods)
        self.runs = runs
        self.seed = seed
        self.start = start

    def instance_seed(self, cell_index, run):
        return self.seed + 1000 * cell_index + run

    def jobs(self):
        for ci, cell in enumerate(self.cells):
            for method, mapping in self.methods:
                for run in range(self.runs):
                    yield ci, cell, method, mapping, run


def _parse_method(text):
    """``rule[:mapping]`` or ``baseline:<name>``."""
    if text.startswith("baseline:"):
        name = text.split(":", 1)[1]
        if name not in BASELINES:
            raise UsageError("unknown baseline %r" % name)
        return text, "none"
    rule, _, mapping = text.partition(":")
    mapping = mapping or "local_norm"
    try:
        UpdateRule(rule)
        CentroidMapping(mapping)
    except ValueError as exc:
        raise UsageError(str(exc))
    return rule, mapping


def _run_job(plan, args, job):
    ci, (shape, m, n, cap, chi), method, mapping, run = job
    seed = plan.instance_seed(ci, run)
    inst = generate(GeneratorSpec(shape, m, n, capacitated=cap,
                                  feasibility=chi, seed=seed))
    try:
        rep = _solve_method(inst, method, mapping, args, start=plan.start)
        status, obj = rep.status, "%.17g" % rep.objective
        major, minor = rep.major_cycles, rep.minor_cycles_total
        wall = "%.3f" % (1000.0 * rep.wall_time)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        status = "error:" + type(exc).__name__
        obj, major, minor, wall = "nan", 0, 0, "0.000"
    kind = method if method.startswith("baseline:") else UpdateRule(method).kind
    return ["c%d" % ci, m, n, int(cap), "" if chi is None else "%g" % chi,
            kind, mapping, run, seed, status, obj, major, minor, wall]


def run_bench(plan, args):
    """Raw rows in plan order."""
    jobs = list(plan.jobs())
    workers = _threads()
    if workers == 1:
        return [_run_job(plan, args, j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: _run_job(plan, args, j), jobs))


def aggregate(rows):
    """Per (cell, method, mapping) means of the raw rows."""
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[:7]), []).append(r)
    out = []
    for key, grp in groups.items():
        ok = [r for r in grp if not str(r[9]).startswith("error")]

        def mean(col):
            vals = [float(r[col]) for r in ok]
            return "%.17g" % (sum(vals) / len(vals)) if vals else "nan"

        out.append(list(key) + [len(grp), mean(10), mean(11), mean(12),
                                mean(13),
                                sum(1 for r in grp if r[9] == "time_limit")])
    return out


def _csv_text(header, rows, comment=None):
    buf = io.StringIO()
    if comment:
        buf.write("# %s\n" % comment)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_bench(args, out):
    shape = args.shape
    ms = args.m
    ns = args.n if args.n else [_default_n(shape, m) for m in ms]
    if len(ns) != len(ms):
        raise UsageError("--n needs one value per --m value")
    cells = [(shape, m, n, args.capacitated, args.feasible)
             for m, n in zip(ms, ns)]
    for c in cells:
        try:
            GeneratorSpec(*c, seed=0)
        except ValueError as exc:
            raise UsageError(str(exc))
    methods = [_parse_method(t) for t in args.methods]
    plan = BenchPlan(cells, methods, runs=args.runs, seed=args.seed,
                     start=args.start)
    rows = run_bench(plan, args)
    eps = "1e-8*(1+||b||)"
    comment = "eps=%s time_limit=%g start=%s" % (eps, args.time_limit,
                                                args.start)
    raw = _csv_text(RAW_COLUMNS, rows, comment)
    agg = _csv_text(AGG_COLUMNS, aggregate(rows), comment)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(raw)
        agg_path = args.aggregate or _agg_path(args.output)
        with open(agg_path, "w", newline="") as fh:
            fh.write(agg)
    else:
        out.write(raw)
        out.write("\n")
        out.write(agg)
    return 0


def _agg_path(path):
    root, ext = os.path.splitext(path)
    return root + "_agg" + (ext or ".csv")


# -- verify -----------------------------------------------------------------


def _random_instance(rng, m, n, k):
    A = rng.uniform(-0.5, 0.5, (m, n))
    capacitated = k % 2 == 1
    u = rng.uniform(0.5, 2.0, n) if capacitated else None
    if k % 4 >= 2:
        x = rng.uniform(0.0, 1.0, n)
        if u is not None:
            x = np.minimum(x, u)
        b = A @ x
    else:
        b = rng.uniform(-1.0, 1.0, m)
    return Instance(A, b, u)


def _merge(results):
    """One result per check name: the first failure, else the tightest."""
    merged = {}
    for r in results:
        cur = merged.get(r.name)
        if cur is None:
            merged[r.name] = r
        elif cur.passed and (not r.passed or _slack(r) < _slack(cur)):
            merged[r.name] = r
    return list(merged.values())


def _slack(r):
    return r.bound - r.measured


def run_verify(m, n, instances, seed, points=20, time_limit=60.0):
    """Randomized invariant suite on small instances; list of results."""
    if n > MAX_BRUTE_N:
        raise UsageError("n=%d exceeds the verification cap n <= %d"
                         % (n, MAX_BRUTE_N))
    if n + m > MAX_CIRCUIT_DIM:
        raise UsageError("n + m = %d exceeds the verification cap n + m <= %d"
                         % (n + m, MAX_CIRCUIT_DIM))
    if m < 1 or n < 1 or instances < 1:
        raise UsageError("sizes and instance count must be positive")
    rng = np.random.default_rng(seed)
    res = []
    C = checks.CheckResult
    for k in range(instances):
        inst = _random_instance(rng, m, n, k)
        cert = brute_force_optimum(inst)
        cat = enumerate_circuits(inst.A)
        rules = ["projected_gradient", "coordinate"]
        if inst.all_bounded:
            rules.append("frank_wolfe")
        for rule in rules:
            for mapping in ("oblivious", "local_norm"):
                rep = solve(inst, SolverConfig(
                    rule=UpdateRule(rule), mapping=CentroidMapping(mapping),
                    opt_tol=1e-9, record_points=True, time_limit=time_limit))
                rel = abs(rep.objective - cert.p_star) / max(1.0, cert.p_star)
                res.append(C("oracle-objective", rel <= 1e-7, rel, 1e-7))
                opt = check_optimality(inst, _final_iterate(inst, rep), 1e-8)
                res.append(C("kkt", bool(opt), opt.violation, 1e-8))
                res.append(checks.check_finiteness(inst, rep))
                res.append(checks.check_monotone(inst, rep))
                res.append(checks.check_pythagorean(inst, rep))
                res.append(checks.check_update_move(inst, rep))
                res.append(checks.check_stable_exit(inst, rep))
                res.append(checks.check_xhat_identity(
                    inst, rep, CentroidMapping(mapping), rng=k))
                if rule == "projected_gradient" and inst.is_nnls:
                    res.append(checks.check_pg_drop(inst, rep))
                if rule == "coordinate" and inst.is_nnls:
                    res.append(checks.check_independence(inst, rep))
                if inst.is_nnls and rule != "frank_wolfe":
                    cr = verify_contraction(inst, rep, cert, cat, rule=rule)
                    res.append(C("contraction", cr.violations == 0,
                                 cr.worst_ratio, 1.0))
                    res.append(C("z-bound", cr.z_bound_violations == 0,
                                 cr.worst_z_ratio, 1.0))
        X = rng.uniform(0.0, 1.0, (inst.n, points)) * np.where(
            inst.finite_upper, inst.u, 2.0)[:, None]
        worst = max(p.ratio for p in verify_proximity_many(inst, X, cert, cat))
        ok = all(p.passed for p in verify_proximity_many(inst, X, cert, cat))
        res.append(C("proximity", ok, worst, 1.0))
    # circuit imbalance of a fixed network matrix is exactly one
    net = incidence_instance([(1, 2), (2, 3), (3, 1)], [0.0, 0.0, 0.0])
    kap = enumerate_circuits(net.A).kappa
    res.append(C("circuits-tu", kap == 1.0, kap, 1.0))
    return _merge(res)


def _final_iterate(inst, rep):
    from .iterate import make_iterate
    return make_iterate(inst, rep.x_final)


def cmd_verify(args, out):
    results = run_verify(args.m, args.n, args.instances, args.seed,
                         points=args.points, time_limit=args.time_limit)
    for r in results:
        print(str(r), file=out)
    return 0 if all(r.passed for r in results) else 1


# -- parser -----------------------------------------------------------------


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0))
    parser.add_argument("--time-limit", type=float, default=default(60.0),
                        help="seconds per run (default 60)")
    parser.add_argument("--opt-tol", type=float, default=default(None),
                        help="optimality tolerance (default 1e-9 (1+||b||))")
    parser.add_argument("--snap-tol", type=float, default=default(1e-12))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mnpz",
        description="Box-constrained least squares by update-and-stabilize.")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common],
                       help="write a random instance")
    g.add_argument("--shape", type=_shape, default="rectangular")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--capacitated", action="store_true",
                   help="upper bounds u = 1")
    g.add_argument("--feasible", type=float, metavar="CHI",
                   help="plant b from a random solution with sparsity CHI")
    g.add_argument("-o", "--output", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve one instance")
    s.add_argument("instance")
    s.add_argument("--rule", default="pg",
                   help="pg, fw or coordinate (default pg)")
    s.add_argument("--mapping", default="local-norm",
                   help="oblivious or local-norm (default local-norm)")
    s.add_argument("--baseline", choices=BASELINES,
                   help="run a baseline method instead")
    s.add_argument("--start", default="auto",
                   choices=("auto", "zero", "interior"))
    s.add_argument("--trace", metavar="CSV", help="write the cycle trace")

    b = sub.add_parser("bench", parents=[common], help="benchmark grid")
    b.add_argument("--shape", type=_shape, default="rectangular")
    b.add_argument("--m", type=int, nargs="+", required=True)
    b.add_argument("--n", type=int, nargs="+")
    b.add_argument("--capacitated", action="store_true")
    b.add_argument("--feasible", type=float, metavar="CHI")
    b.add_argument("--methods", nargs="+",
                   default=["coordinate", "pg:oblivious", "pg:local-norm"],
                   help="rule[:mapping] or baseline:<pg|pfg|fw|afw>")
    b.add_argument("--runs", type=int, default=5)
    b.add_argument("--start", default="auto",
                   choices=("auto", "zero", "interior"))
    b.add_argument("-o", "--output", help="raw CSV path (default stdout)")
    b.add_argument("--aggregate", help="aggregate CSV path")

    v = sub.add_parser("verify", parents=[common],
                       help="run the invariant suite on small instances")
    v.add_argument("--m", type=int, default=3)
    v.add_argument("--n", type=int, default=6)
    v.add_argument("--instances", type=int, default=6)
    v.add_argument("--points", type=int, default=20)
    return parser


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve,
            "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, UpdateContractError, InstanceFormatError,
            OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
