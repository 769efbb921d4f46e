"""Centroid mappings: projecting an iterate onto its centroid set.

The centroid set of a partition ``(I0, I1, J)`` is the affine set of
least-squares minimizers of ``||A y - b||`` with ``y`` fixed to 0 on I0 and
to ``u`` on I1. A mapping picks one member:

* ``oblivious`` -- the member with minimum ``||y_J||``;
* ``local_norm`` -- the member closest to the current point in the weighted
  norm ``||D(x) (y - x)||`` with ``D(x)(i) = 1/x(i) + 1/(u(i) - x(i))`` on J
  (the second term vanishes when ``u(i)`` is infinite).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import min_norm_least_squares, weighted_constrained_ls

__all__ = [
    "CentroidMapping",
    "OBLIVIOUS",
    "LOCAL_NORM",
    "local_norm_weights",
    "centroid",
    "is_stable",
]

KINDS = ("oblivious", "local_norm")


@dataclass(frozen=True)
class CentroidMapping:
    kind: str = "local_norm"
    # keeps the weights finite when x(i) sits barely inside the box
    weight_cap: float = 1e12

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in KINDS:
            raise ValueError("unknown centroid mapping %r" % self.kind)
        object.__setattr__(self, "kind", kind)


OBLIVIOUS = CentroidMapping("oblivious")
LOCAL_NORM = CentroidMapping("local_norm")


def local_norm_weights(x_J, u_J, cap=1e12):
    with np.errstate(divide="ignore"):
        w = 1.0 / x_J
        finite = np.isfinite(u_J)
        w[finite] += 1.0 / (u_J[finite] - x_J[finite])
    return np.minimum(w, cap)


def centroid(inst, it, mapping=LOCAL_NORM):
    """
    The mapping's member of the centroid set of `it`'s partition.

    Coordinates in I0 and I1 are returned at their bounds; with ``J`` empty
    the result is ``it.x`` itself.
    """
    w = it.x.copy()
    J = it.J
    if J.size == 0:
        return w
    A = inst.A
    rhs = inst.b - A[:, it.I1] @ inst.u[it.I1]
    B = A[:, J]
    if mapping.kind == "oblivious":
        w[J] = min_norm_least_squares(B, rhs)
    else:
        weights = local_norm_weights(it.x[J], inst.u[J], mapping.weight_cap)
        w[J] = weighted_constrained_ls(B, rhs, it.x[J], weights)
    return w


def is_stable(inst, it, mapping=LOCAL_NORM, tol=1e-12):
    """True iff the centroid moves no coordinate by more than
    ``tol * (1 + ||x||_inf)``."""
    w = centroid(inst, it, mapping)
    scale = 1.0 + float(np.max(np.abs(it.x), initial=0.0))
    return float(np.max(np.abs(w - it.x), initial=0.0)) <= tol * scale
