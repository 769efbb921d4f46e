"""Invariant checks on solver traces.

Every check returns a `CheckResult`; its string form is the one-line
``PASS/FAIL <name> measured=<v> bound=<v>`` report used by the CLI.
Traces must come from ``solve`` with ``record_points=True``.
"""

from dataclasses import dataclass

import numpy as np

from .centroids import centroid
from .iterate import gradient, make_iterate
from .linalg import numerical_rank
from .updates import pg_direction

__all__ = [
    "CheckResult",
    "check_finiteness",
    "check_monotone",
    "check_pythagorean",
    "check_pg_drop",
    "check_update_move",
    "check_stable_exit",
    "check_independence",
    "check_xhat_identity",
    "trace_points",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float

    def __bool__(self):
        return self.passed

    def __str__(self):
        return "%s %s measured=%.6g bound=%.6g" % (
            "PASS" if self.passed else "FAIL", self.name,
            self.measured, self.bound)


def _result(name, measured, bound):
    return CheckResult(name, bool(measured <= bound), float(measured),
                       float(bound))


def trace_points(report):
    """``[(event, x_before, x_after)]`` for every trace event."""
    if report.x_start is None:
        raise ValueError("report has no start point")
    out = []
    cur = report.x_start
    for ev in report.trace:
        if ev.x is None:
            raise ValueError("solve was not run with record_points=True")
        out.append((ev, cur, ev.x))
        cur = ev.x
    return out


def _end_of_major_points(inst, report):
    """Stable points: the start after its own stabilization, then the end of
    every major cycle."""
    pts = []
    cur = report.x_start
    last_major = 0
    for ev, _, x in trace_points(report):
        if ev.cycle_kind == "major_update" and ev.major_index != last_major:
            pts.append(cur)
            last_major = ev.major_index
        cur = x
    pts.append(cur)
    return pts


def check_finiteness(inst, report):
    """
    At most ``n`` minor cycles per major cycle, no repeated partition at the
    end of a major cycle, and at most ``3^n`` major cycles. `measured` counts
    violations.
    """
    n = inst.n
    viol = 0
    viol += sum(1 for c in report.minor_cycles_per_major() if c > n)
    if report.major_cycles > 3 ** n:
        viol += 1
    seen = set()
    # the terminating update does not move, so its end partition is the
    # previous one and is excluded
    for x in _end_of_major_points(inst, report)[:-1]:
        key = make_iterate(inst, x).partition_key()
        if key in seen:
            viol += 1
        seen.add(key)
    return _result("finiteness", viol, 0)


def check_monotone(inst, report):
    slack = 1e-8 * (1.0 + float(inst.b @ inst.b))
    prev = inst.objective(report.x_start)
    worst = -np.inf
    for ev in report.trace:
        worst = max(worst, ev.objective_after - prev)
        prev = ev.objective_after
    return _result("monotone", max(worst, 0.0), slack)


def check_pythagorean(inst, report):
    """
    At each minor step with ``alpha* = 1``:
    ``||Ax - b||^2 = ||Aw - b||^2 + ||Aw - Ax||^2``. Relative error.
    """
    A, b = inst.A, inst.b
    worst = 0.0
    for ev, x, w in trace_points(report):
        if ev.cycle_kind != "minor_centroid" or ev.alpha_star != 1.0:
            continue
        rx, rw = A @ x - b, A @ w - b
        lhs = float(rx @ rx)
        rhs = float(rw @ rw) + float(np.sum((A @ (w - x)) ** 2))
        worst = max(worst, abs(lhs - rhs) / (1.0 + lhs))
    return _result("pythagorean", worst, 1e-8)


def check_pg_drop(inst, report):
    """
    NNLS projected-gradient steps: ``f(x) - f(y) = ||z||^4 / (2 ||Az||^2)``.
    Relative error.
    """
    A, b = inst.A, inst.b
    worst = 0.0
    for ev, x, y in trace_points(report):
        if ev.cycle_kind != "major_update" or not ev.moved:
            continue
        it = make_iterate(inst, x)
        z = pg_direction(inst, it)
        Az = A @ z
        zz, AzAz = float(z @ z), float(Az @ Az)
        if AzAz == 0.0:
            continue
        predicted = zz * zz / (2.0 * AzAz)
        d = y - x
        Ad = A @ d
        # f(x) - f(y) without cancellation
        drop = -float(it.residual @ Ad) - 0.5 * float(Ad @ Ad)
        worst = max(worst, abs(drop - predicted) / max(predicted, 1e-300))
    return _result("pg-drop", worst, 1e-8)


def check_update_move(inst, report):
    """``||Ax - Ay||^2 <= ||Ax - b||^2 - ||Ay - b||^2`` at each update."""
    A, b = inst.A, inst.b
    worst = -np.inf
    for ev, x, y in trace_points(report):
        if ev.cycle_kind != "major_update":
            continue
        rx, ry = A @ x - b, A @ y - b
        lhs = float(np.sum((A @ (x - y)) ** 2))
        worst = max(worst, lhs - (float(rx @ rx) - float(ry @ ry)))
    return _result("update-move", max(worst, 0.0), 1e-8)


def check_stable_exit(inst, report, tol=None):
    """``||A_J^T (Ax - b)||_inf`` at the end of every major cycle."""
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.linalg.norm(inst.b)))
    worst = 0.0
    for x in _end_of_major_points(inst, report):
        it = make_iterate(inst, x)
        g = gradient(inst, it)
        worst = max(worst, float(np.max(np.abs(g[it.J]), initial=0.0)))
    return _result("stable-exit", worst, tol)


def check_independence(inst, report):
    """Columns of ``A`` on the free set are independent at every stable
    point. `measured` counts rank-deficient points."""
    viol = 0
    for x in _end_of_major_points(inst, report):
        it = make_iterate(inst, x)
        if numerical_rank(inst.A[:, it.J]) < it.J.size:
            viol += 1
    return _result("independence", viol, 0)


def check_xhat_identity(inst, report, mapping, rng=None, samples=3):
    """
    At stable points ``x``, zeroing a random subset of the free coordinates
    (coordinates strictly inside the box) gives ``x_hat`` with
    ``||A x_hat - b||^2 = ||Ax - b||^2 + ||A x_hat - Ax||^2``. Relative
    error over all samples.
    """
    rng = np.random.default_rng(rng)
    A, b = inst.A, inst.b
    worst = 0.0
    for x in _end_of_major_points(inst, report):
        it = make_iterate(inst, x)
        w = centroid(inst, it, mapping)
        if np.max(np.abs(w - it.x), initial=0.0) > 1e-9 * (1 + np.max(it.x)):
            continue
        pos = it.J
        if pos.size == 0:
            continue
        for _ in range(samples):
            drop = pos[rng.random(pos.size) < 0.5]
            xh = it.x.copy()
            xh[drop] = 0.0
            r, rh = it.residual, A @ xh - b
            lhs = float(rh @ rh)
            rhs = float(r @ r) + float(np.sum((A @ (xh - it.x)) ** 2))
            worst = max(worst, abs(lhs - rhs) / (1.0 + lhs))
    return _result("xhat-identity", worst, 1e-8)
