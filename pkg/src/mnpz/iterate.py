"""Feasible points together with their bound partition ``(I0, I1, J)``."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_SNAP_TOL",
    "Iterate",
    "Optimality",
    "InfeasiblePointError",
    "make_iterate",
    "gradient",
    "check_optimality",
    "default_opt_tol",
]

DEFAULT_SNAP_TOL = 1e-12


class InfeasiblePointError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Iterate:
    """
    A point of the box with exact bound membership.

    ``I0``, ``I1`` and ``J`` are sorted index arrays: coordinates equal to
    zero, equal to a finite upper bound, and strictly between the bounds.
    ``residual`` caches ``A x - b``.
    """

    x: np.ndarray
    I0: np.ndarray
    I1: np.ndarray
    J: np.ndarray
    residual: np.ndarray
    objective: float

    @property
    def n(self):
        return self.x.shape[0]

    def partition_key(self):
        """Hashable ``(I0, I1)`` pair identifying the partition."""
        return (tuple(self.I0.tolist()), tuple(self.I1.tolist()))

    @property
    def sizes(self):
        return (len(self.I0), len(self.I1), len(self.J))


def _snap_scale(u):
    return np.where(np.isfinite(u), np.maximum(1.0, u), 1.0)


def make_iterate(inst, x_raw, snap_tol=DEFAULT_SNAP_TOL):
    """
    Snap `x_raw` onto the box and build its iterate.

    Coordinates within ``snap_tol * max(1, u(i))`` of a bound are set to the
    bound exactly (``max(1, u(i))`` is read as 1 when ``u(i)`` is infinite).
    Violations larger than that raise `InfeasiblePointError`.
    """
    x = np.array(x_raw, dtype=float, copy=True)
    u = inst.u
    if x.shape != (inst.n,):
        raise ValueError("x has shape %s, expected (%d,)" % (x.shape, inst.n))
    if not np.all(np.isfinite(x)):
        raise InfeasiblePointError("x has non-finite coordinates")
    tol = snap_tol * _snap_scale(u)
    bad = (x < -tol) | (x > u + tol)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InfeasiblePointError(
            "x(%d) = %r violates the box [0, %r] by more than %g"
            % (i, x[i], u[i], tol[i]))
    lower = x <= tol
    upper = ~lower & (x >= u - tol)
    x[lower] = 0.0
    x[upper] = u[upper]
    r = inst.A @ x - inst.b
    return Iterate(
        x=x,
        I0=np.flatnonzero(lower),
        I1=np.flatnonzero(upper),
        J=np.flatnonzero(~(lower | upper)),
        residual=r,
        objective=0.5 * float(r @ r),
    )


def gradient(inst, it):
    """``A.T (A x - b)`` at the iterate."""
    return inst.A.T @ it.residual


def default_opt_tol(inst):
    return 1e-9 * (1.0 + float(np.linalg.norm(inst.b)))


@dataclass(frozen=True)
class Optimality:
    """
    Outcome of a first-order optimality check.

    When not optimal, `index` is the worst offending coordinate, `kind` one
    of ``"I0-negative-gradient"``, ``"I1-positive-gradient"`` or
    ``"J-nonzero-gradient"``, and `violation` its size beyond zero.
    """

    optimal: bool
    index: int = None
    kind: str = None
    violation: float = 0.0

    def __bool__(self):
        return self.optimal


def check_optimality(inst, it, tol=None, g=None):
    """
    KKT test: ``g >= -tol`` on I0, ``g <= tol`` on I1, ``|g| <= tol`` on J.
    """
    if tol is None:
        tol = default_opt_tol(inst)
    if g is None:
        g = gradient(inst, it)
    viol = np.zeros(it.n)
    viol[it.I0] = -g[it.I0]
    viol[it.I1] = g[it.I1]
    viol[it.J] = np.abs(g[it.J])
    i = int(np.argmax(viol))
    if viol[i] <= tol:
        return Optimality(True, violation=max(0.0, float(viol[i])))
    if i in set(it.I0.tolist()):
        kind = "I0-negative-gradient"
    elif i in set(it.I1.tolist()):
        kind = "I1-positive-gradient"
    else:
        kind = "J-nonzero-gradient"
    return Optimality(False, i, kind, float(viol[i]))
