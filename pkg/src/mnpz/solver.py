"""The update-and-stabilize loop.

Each major cycle applies one first-order update; the minor cycles that
follow repeatedly move towards the centroid of the current partition,
stopping at the box boundary when the centroid lies outside, until the point
is stable (equal to its own centroid).
"""

from dataclasses import dataclass, field
import logging
import time

import numpy as np

from .centroids import CentroidMapping, centroid
from .iterate import (
    DEFAULT_SNAP_TOL,
    check_optimality,
    default_opt_tol,
    make_iterate,
)
from .updates import (
    UpdateContractError,
    UpdateRule,
    apply_update,
    default_pg_step,
)

__all__ = [
    "SolverConfig",
    "SolveReport",
    "TraceEvent",
    "NumericalFaultError",
    "alpha_star",
    "solve",
    "start_point",
]

log = logging.getLogger(__name__)


class NumericalFaultError(RuntimeError):
    """The objective increased or a minor cycle made no progress."""


@dataclass(frozen=True)
class SolverConfig:
    """
    Solver settings.

    `opt_tol` of ``None`` means ``1e-9 (1 + ||b||)``. `start` is a point,
    ``None``/``"zero"`` for the origin, or ``"interior"`` for the point with
    coordinates ``min(1, u(i)/2)``, which lies strictly inside the box. With `record_points` every trace event keeps a
    copy of the point it produced.
    """

    rule: UpdateRule = field(default_factory=UpdateRule)
    mapping: CentroidMapping = field(default_factory=CentroidMapping)
    start: np.ndarray = None
    opt_tol: float = None
    snap_tol: float = DEFAULT_SNAP_TOL
    max_major: int = 10**6
    max_minor_total: int = 10**7
    time_limit: float = 60.0
    record_points: bool = False

    def __post_init__(self):
        if self.opt_tol is not None and not self.opt_tol > 0:
            raise ValueError("opt_tol must be positive")
        if not self.snap_tol > 0:
            raise ValueError("snap_tol must be positive")
        if self.max_major < 1 or self.max_minor_total < 1:
            raise ValueError("iteration caps must be positive")
        if isinstance(self.start, str) and self.start not in ("zero", "interior"):
            raise ValueError("unknown start %r" % self.start)
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True, eq=False)
class TraceEvent:
    cycle_kind: str  # "major_update" or "minor_centroid"
    objective_after: float
    partition_sizes: tuple
    alpha_star: float = None
    moved: bool = True
    major_index: int = 0
    x: np.ndarray = None


@dataclass(eq=False)
class SolveReport:
    x_final: np.ndarray
    objective: float
    status: str  # "optimal", "iteration_cap" or "time_limit"
    major_cycles: int
    minor_cycles_total: int
    trace: list
    wall_time: float = 0.0
    method: str = ""
    mapping: str = ""
    x_start: np.ndarray = None

    def minor_cycles_per_major(self):
        counts = [0] * self.major_cycles
        for ev in self.trace:
            if ev.cycle_kind == "minor_centroid" and ev.major_index > 0:
                counts[ev.major_index - 1] += 1
        return counts


def start_point(inst, start=None):
    """Resolve a `SolverConfig.start` value to a point."""
    if start is None or (isinstance(start, str) and start == "zero"):
        return np.zeros(inst.n)
    if isinstance(start, str):
        if start == "interior":
            return np.minimum(1.0, 0.5 * inst.u)
        raise ValueError("unknown start %r" % start)
    return np.asarray(start, dtype=float)


def alpha_star(x, w, u):
    """
    Largest ``alpha`` in ``[0, 1]`` with ``x + alpha (w - x)`` in the box.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(w, dtype=float) - x
    u = np.asarray(u, dtype=float)
    alpha = 1.0
    down = d < 0
    if np.any(down):
        alpha = min(alpha, float(np.min(x[down] / -d[down])))
    up = (d > 0) & np.isfinite(u)
    if np.any(up):
        alpha = min(alpha, float(np.min((u[up] - x[up]) / d[up])))
    return max(0.0, alpha)


def _blocking(x, d, u, alpha):
    # coordinates whose bound is reached at alpha; exact ratio ties included
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = (d < 0) & (x / -d <= alpha)
        hi = (d > 0) & np.isfinite(u) & ((u - x) / d <= alpha)
    return lo, hi


class _Run:
    def __init__(self, inst, cfg):
        self.inst = inst
        self.cfg = cfg
        self.tol = cfg.opt_tol if cfg.opt_tol is not None else default_opt_tol(inst)
        self.slack = 1e-8 * (1.0 + float(inst.b @ inst.b))
        self.t0 = time.perf_counter()
        self.trace = []
        self.major = 0
        self.minor = 0
        rule = cfg.rule
        if (rule.kind == "projected_gradient" and rule.pg_step is None
                and not inst.is_nnls):
            rule = UpdateRule(rule.kind, default_pg_step(inst))
        elif rule.kind == "frank_wolfe" and not inst.all_bounded:
            raise UpdateContractError("frank-wolfe requires finite bounds")
        self.rule = rule

    def out_of_time(self):
        return time.perf_counter() - self.t0 > self.cfg.time_limit

    def record(self, kind, it, alpha=None, moved=True):
        self.trace.append(TraceEvent(
            kind, it.objective, it.sizes, alpha, moved, self.major,
            it.x.copy() if self.cfg.record_points else None))

    def check_monotone(self, before, after, where):
        if after.objective > before.objective + self.slack:
            raise NumericalFaultError(
                "objective increased from %.17g to %.17g in %s (major cycle %d)"
                % (before.objective, after.objective, where, self.major))

    def stabilize(self, it):
        """Minor cycles; returns (iterate, status or None)."""
        inst, cfg = self.inst, self.cfg
        while True:
            w = centroid(inst, it, cfg.mapping)
            d = w - it.x
            scale = 1.0 + float(np.max(np.abs(it.x), initial=0.0))
            if float(np.max(np.abs(d), initial=0.0)) <= cfg.snap_tol * scale:
                return it, None
            if self.minor >= cfg.max_minor_total:
                return it, "iteration_cap"
            if self.out_of_time():
                return it, "time_limit"
            alpha = alpha_star(it.x, w, inst.u)
            x_new = it.x + alpha * d
            if alpha < 1.0:
                lo, hi = _blocking(it.x, d, inst.u, alpha)
                x_new[lo] = 0.0
                x_new[hi] = inst.u[hi]
            x_new = np.clip(x_new, 0.0, inst.u)
            nxt = make_iterate(inst, x_new, cfg.snap_tol)
            self.minor += 1
            self.record("minor_centroid", nxt, alpha)
            self.check_monotone(it, nxt, "a minor cycle")
            bound_before = it.I0.size + it.I1.size
            bound_after = nxt.I0.size + nxt.I1.size
            if alpha < 1.0 and bound_after <= bound_before:
                raise NumericalFaultError(
                    "minor cycle with alpha*=%g did not reach a new bound "
                    "(major cycle %d)" % (alpha, self.major))
            if alpha == 1.0 and bound_after == bound_before:
                # x is now in the centroid set of its own partition, and
                # both mappings are idempotent there
                return nxt, None
            it = nxt


def solve(inst, cfg=None):
    """
    Run the update-and-stabilize method.

    Returns a `SolveReport`; ``status == "optimal"`` means the final point
    passed the optimality check at the configured tolerance.
    """
    if cfg is None:
        cfg = SolverConfig()
    run = _Run(inst, cfg)
    x0 = start_point(inst, cfg.start)
    it = make_iterate(inst, x0, cfg.snap_tol)
    x_start = it.x.copy()
    status = None
    # a custom start may not be stable; the update rules assume it is
    it, status = run.stabilize(it)
    while status is None:
        if run.major >= cfg.max_major:
            status = "iteration_cap"
            break
        if run.out_of_time():
            status = "time_limit"
            break
        res = apply_update(inst, it, run.rule, run.tol, cfg.snap_tol)
        run.major += 1
        run.record("major_update", res.y, moved=res.moved)
        if not res.moved:
            status = "optimal"
            break
        run.check_monotone(it, res.y, "an update")
        if not res.y.objective < it.objective:
            log.debug("update at major cycle %d made no measurable progress",
                      run.major)
        it, status = run.stabilize(res.y)

    if status == "optimal" and not check_optimality(inst, it, run.tol):
        raise NumericalFaultError("terminated at a point failing the KKT test")
    wall = time.perf_counter() - run.t0
    log.debug("solve: %s after %d major / %d minor cycles in %.3fs",
              status, run.major, run.minor, wall)
    return SolveReport(
        x_final=it.x,
        objective=it.objective,
        status=status,
        major_cycles=run.major,
        minor_cycles_total=run.minor,
        trace=run.trace,
        wall_time=wall,
        method=cfg.rule.kind,
        mapping=cfg.mapping.kind,
        x_start=x_start,
    )
