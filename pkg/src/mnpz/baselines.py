"""Plain first-order methods used as comparison baselines.

None of these terminate finitely; they stop once the projected-gradient
residual ``||x - clip(x - g, 0, u)||_inf`` drops to `eps` or a cap is hit.
Results are returned as `SolveReport` objects with every iteration counted
as a major cycle and no minor cycles.
"""

from dataclasses import dataclass
import time

import numpy as np

from .linalg import spectral_norm
from .solver import SolveReport, TraceEvent

__all__ = [
    "BaselineConfig",
    "run_baseline",
    "stationarity",
]

METHODS = ("pg", "pfg", "fw", "afw")


@dataclass(frozen=True)
class BaselineConfig:
    """`eps` of ``None`` means ``1e-8 (1 + ||b||)``."""

    method: str = "pg"
    eps: float = None
    max_iters: int = 10**6
    time_limit: float = 60.0
    start: np.ndarray = None
    record_trace: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError("unknown baseline %r" % self.method)
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


def stationarity(inst, x, g):
    return float(np.max(np.abs(x - np.clip(x - g, 0.0, inst.u)), initial=0.0))


def _vertex_key(mask):
    return np.packbits(mask).tobytes()


class _Problem:
    def __init__(self, inst):
        self.inst = inst
        self.A = inst.A
        self.b = inst.b

    def value_grad(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r), self.A.T @ r

    def line_step(self, g, d, t_max=1.0):
        Ad = self.A @ d
        curv = float(Ad @ Ad)
        slope = float(g @ d)
        if curv <= 0.0:
            return t_max if slope < 0 else 0.0
        return min(t_max, max(0.0, -slope / curv))


def run_baseline(inst, cfg=None):
    """
    Run one baseline method.

    ``pg`` and ``pfg`` use the fixed step ``1/||A||^2``; ``pfg`` is the
    accelerated variant restarted whenever the objective goes up. ``fw``
    and ``afw`` (Frank-Wolfe with away steps) use exact line search and
    need finite upper bounds.
    """
    if cfg is None:
        cfg = BaselineConfig()
    if cfg.method in ("fw", "afw") and not inst.all_bounded:
        raise ValueError("frank-wolfe requires finite bounds")
    eps = cfg.eps if cfg.eps is not None else (
        1e-8 * (1.0 + float(np.linalg.norm(inst.b))))
    prob = _Problem(inst)
    t0 = time.perf_counter()
    if cfg.start is None:
        x = np.zeros(inst.n)
    else:
        x = np.clip(np.asarray(cfg.start, dtype=float), 0.0, inst.u)
    step = None
    if cfg.method in ("pg", "pfg"):
        L = spectral_norm(inst.A) ** 2
        step = 1.0 / L if L > 0 else 1.0

    trace = []
    f, g = prob.value_grad(x)
    status = "iteration_cap"
    iters = 0
    state = _init_state(cfg.method, inst, x)
    while True:
        if stationarity(inst, x, g) <= eps:
            status = "optimal"
            break
        if iters >= cfg.max_iters:
            break
        if time.perf_counter() - t0 > cfg.time_limit:
            status = "time_limit"
            break
        x, f, g = _STEPS[cfg.method](prob, x, f, g, step, state)
        iters += 1
        if cfg.record_trace:
            trace.append(TraceEvent("major_update", f, (), None, True, iters))
    return SolveReport(
        x_final=x,
        objective=f,
        status=status,
        major_cycles=iters,
        minor_cycles_total=0,
        trace=trace,
        wall_time=time.perf_counter() - t0,
        method=cfg.method,
        mapping="none",
        x_start=None,
    )


def _init_state(method, inst, x):
    if method == "pfg":
        return {"y": x.copy(), "t": 1.0}
    if method == "afw":
        u = inst.u
        if not (np.all((x == 0) | (x == u))):
            raise ValueError("away-step Frank-Wolfe must start at a vertex")
        mask = x == u
        return {"weights": {_vertex_key(mask): 1.0},
                "masks": {_vertex_key(mask): mask}}
    return {}


def _pg_step(prob, x, f, g, step, state):
    x = np.clip(x - step * g, 0.0, prob.inst.u)
    f, g = prob.value_grad(x)
    return x, f, g


def _pfg_step(prob, x, f, g, step, state):
    # FISTA with function-value restart
    y, t = state["y"], state["t"]
    _, gy = prob.value_grad(y)
    x_new = np.clip(y - step * gy, 0.0, prob.inst.u)
    f_new, g_new = prob.value_grad(x_new)
    if f_new > f:
        # restart from the last iterate with a plain projected step
        x_new = np.clip(x - step * g, 0.0, prob.inst.u)
        f_new, g_new = prob.value_grad(x_new)
        state["y"], state["t"] = x_new.copy(), 1.0
        return x_new, f_new, g_new
    t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
    state["y"] = x_new + ((t - 1.0) / t_new) * (x_new - x)
    state["t"] = t_new
    return x_new, f_new, g_new


def _fw_step(prob, x, f, g, step, state):
    s = np.where(g < 0, prob.inst.u, 0.0)
    d = s - x
    t = prob.line_step(g, d)
    x = x + t * d
    f, g = prob.value_grad(x)
    return x, f, g


def _afw_step(prob, x, f, g, step, state):
    u = prob.inst.u
    weights, masks = state["weights"], state["masks"]
    s_mask = g < 0
    s = np.where(s_mask, u, 0.0)
    # away vertex: active vertex with the largest <g, v>
    keys = list(weights)
    scores = [float(g @ np.where(masks[k], u, 0.0)) for k in keys]
    a_key = keys[int(np.argmax(scores))]
    v = np.where(masks[a_key], u, 0.0)
    d_fw = s - x
    d_aw = x - v
    if len(weights) > 1 and -float(g @ d_aw) > -float(g @ d_fw):
        a = weights[a_key]
        d, t_max, away = d_aw, a / (1.0 - a) if a < 1.0 else np.inf, True
    else:
        d, t_max, away = d_fw, 1.0, False
    t = prob.line_step(g, d, t_max)
    if t == 0.0:
        return x, f, g
    if away:
        for k in weights:
            weights[k] *= 1.0 + t
        weights[a_key] -= t
        if t >= t_max or weights[a_key] <= 1e-15:
            del weights[a_key]
            del masks[a_key]
    else:
        s_key = _vertex_key(s_mask)
        for k in weights:
            weights[k] *= 1.0 - t
        weights[s_key] = weights.get(s_key, 0.0) + t
        masks[s_key] = s_mask
        if t >= 1.0:
            weights.clear()
            masks.clear()
            weights[s_key] = 1.0
            masks[s_key] = s_mask
    x = x + t * d
    f, g = prob.value_grad(x)
    return x, f, g


_STEPS = {"pg": _pg_step, "pfg": _pfg_step, "fw": _fw_step, "afw": _afw_step}
