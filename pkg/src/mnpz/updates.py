"""First-order ``Update(x)`` steps used by the major cycles.

Every rule returns ``moved=False`` exactly when the iterate passes the
optimality check at the given tolerance, and otherwise a point with strictly
smaller objective that is optimal on the segment from ``x`` to itself.
"""

from dataclasses import dataclass

import numpy as np

from .iterate import check_optimality, gradient, make_iterate, DEFAULT_SNAP_TOL
from .linalg import spectral_norm

__all__ = [
    "UpdateRule",
    "UpdateResult",
    "UpdateContractError",
    "DegenerateStepError",
    "pg_direction",
    "pg_update",
    "capacitated_pg_update",
    "fw_update",
    "coordinate_update",
    "apply_update",
    "default_pg_step",
]

KINDS = ("frank_wolfe", "projected_gradient", "coordinate")
_ALIASES = {"fw": "frank_wolfe", "pg": "projected_gradient",
            "c": "coordinate", "frank-wolfe": "frank_wolfe",
            "projected-gradient": "projected_gradient"}


class UpdateContractError(ValueError):
    """An update rule was called outside its preconditions."""


class DegenerateStepError(ArithmeticError):
    """A descent direction with ``A d = 0`` was produced."""


@dataclass(frozen=True)
class UpdateRule:
    """
    Choice of update.

    `pg_step` only matters for projected gradient: ``None`` uses the exact
    line-search form on NNLS instances and the fixed step ``1/||A||^2`` on
    capacitated ones; a float forces that fixed step (followed by a line
    search on the segment) everywhere.
    """

    kind: str = "projected_gradient"
    pg_step: float = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError("unknown update rule %r" % self.kind)
        object.__setattr__(self, "kind", kind)
        if self.pg_step is not None and not self.pg_step > 0:
            raise ValueError("pg_step must be positive")


@dataclass(frozen=True, eq=False)
class UpdateResult:
    y: object
    moved: bool
    direction_norm: float = 0.0
    step: float = 0.0


def default_pg_step(inst):
    return 1.0 / spectral_norm(inst.A) ** 2


def _require_stable(inst, it, g, tol, name):
    if it.J.size and np.max(np.abs(g[it.J])) > tol:
        raise UpdateContractError(
            "%s needs a stable iterate (|g_J| = %.3g > %.3g)"
            % (name, np.max(np.abs(g[it.J])), tol))


def _segment_step(inst, x, g, d):
    # argmin over t in [0, 1] of 1/2 ||A (x + t d) - b||^2
    slope = float(g @ d)
    Ad = inst.A @ d
    curv = float(Ad @ Ad)
    if curv == 0.0:
        if slope < 0:
            raise DegenerateStepError("descent direction with A d = 0")
        return 0.0
    return min(1.0, max(0.0, -slope / curv))


def _not_moved(it):
    return UpdateResult(it, False)


def pg_direction(inst, it, g=None):
    """``z(i) = max(-g(i), 0)``; NNLS instances only."""
    if not inst.is_nnls:
        raise UpdateContractError(
            "pg_direction is defined for NNLS instances only")
    if g is None:
        g = gradient(inst, it)
    return np.maximum(-g, 0.0)


def pg_update(inst, it, tol, snap_tol=DEFAULT_SNAP_TOL):
    """
    Projected gradient with exact line search on an NNLS instance:
    ``y = x + (||z||^2 / ||A z||^2) z``.
    """
    g = gradient(inst, it)
    z = pg_direction(inst, it, g)
    _require_stable(inst, it, g, tol, "pg_update")
    if check_optimality(inst, it, tol, g):
        return _not_moved(it)
    zz = float(z @ z)
    Az = inst.A @ z
    AzAz = float(Az @ Az)
    if AzAz == 0.0:
        raise DegenerateStepError("projected gradient direction has A z = 0")
    step = zz / AzAz
    y = make_iterate(inst, it.x + step * z, snap_tol)
    return UpdateResult(y, True, float(np.sqrt(zz)), step)


def capacitated_pg_update(inst, it, tol, step=None, snap_tol=DEFAULT_SNAP_TOL):
    """
    Fixed-step projected gradient ``clip(x - step g, 0, u)`` followed by an
    exact line search on the segment from ``x``.
    """
    g = gradient(inst, it)
    if check_optimality(inst, it, tol, g):
        return _not_moved(it)
    if step is None:
        step = default_pg_step(inst)
    y_bar = np.clip(it.x - step * g, 0.0, inst.u)
    d = y_bar - it.x
    t = _segment_step(inst, it.x, g, d)
    if t == 0.0:
        raise DegenerateStepError("no progress along the projected step")
    y = make_iterate(inst, it.x + t * d, snap_tol)
    return UpdateResult(y, True, float(np.linalg.norm(d)), t)


def fw_update(inst, it, tol, snap_tol=DEFAULT_SNAP_TOL):
    """
    Frank-Wolfe step towards the box vertex minimizing ``<g, y>``.

    Coordinates with ``|g(i)| <= tol`` keep their current value in the
    target point rather than jumping to a vertex coordinate.
    """
    if not inst.all_bounded:
        raise UpdateContractError("frank-wolfe requires finite bounds")
    g = gradient(inst, it)
    if check_optimality(inst, it, tol, g):
        return _not_moved(it)
    y_bar = it.x.copy()
    y_bar[g > tol] = 0.0
    neg = g < -tol
    y_bar[neg] = inst.u[neg]
    d = y_bar - it.x
    gap = -float(g @ d)
    if gap <= 0.0:
        raise DegenerateStepError("Frank-Wolfe vertex gives no descent")
    t = _segment_step(inst, it.x, g, d)
    y = make_iterate(inst, it.x + t * d, snap_tol)
    return UpdateResult(y, True, gap, t)


def coordinate_update(inst, it, tol, snap_tol=DEFAULT_SNAP_TOL):
    """
    Single-coordinate step (the Lawson-Hanson move).

    Eligible coordinates are those in I0 with ``g < -tol`` and those in I1
    with ``g > tol``; the one with largest ``|g|`` is chosen (smallest index
    on ties) and set to the minimizer of the objective along it, clamped to
    ``[0, u]``.
    """
    g = gradient(inst, it)
    _require_stable(inst, it, g, tol, "coordinate_update")
    if check_optimality(inst, it, tol, g):
        return _not_moved(it)
    score = np.zeros(it.n)
    score[it.I0] = np.maximum(-g[it.I0], 0.0)
    score[it.I1] = np.maximum(g[it.I1], 0.0)
    j = int(np.argmax(score))
    col = inst.A[:, j]
    cc = float(col @ col)
    if cc == 0.0:
        raise DegenerateStepError("column %d of A is zero" % j)
    y = it.x.copy()
    y[j] = min(inst.u[j], max(0.0, it.x[j] - g[j] / cc))
    return UpdateResult(
        make_iterate(inst, y, snap_tol), True, float(score[j]),
        abs(y[j] - it.x[j]))


def apply_update(inst, it, rule, tol, snap_tol=DEFAULT_SNAP_TOL):
    """Dispatch to the update selected by `rule`."""
    if rule.kind == "frank_wolfe":
        return fw_update(inst, it, tol, snap_tol)
    if rule.kind == "coordinate":
        return coordinate_update(inst, it, tol, snap_tol)
    if inst.is_nnls and rule.pg_step is None:
        return pg_update(inst, it, tol, snap_tol)
    return capacitated_pg_update(inst, it, tol, rule.pg_step, snap_tol)
