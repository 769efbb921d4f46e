"""Problem instances ``min 1/2 ||Ax - b||^2  s.t.  0 <= x <= u``.

Random generators follow the experiment families used for benchmarking:
uniform ``[-0.5, 0.5]`` matrices, either a random right-hand side or a
planted feasible one built from a random sparse nonnegative combination of
columns.
"""

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "Instance",
    "GeneratorSpec",
    "InstanceFormatError",
    "generate",
    "near_square_sizes",
    "incidence_instance",
    "read_instance",
    "write_instance",
    "load_instance",
    "save_instance",
]

FORMAT_HEADER = "MNP 1"


class InstanceFormatError(ValueError):
    """Malformed instance text; `lineno` is 1-based."""

    def __init__(self, lineno, message):
        super().__init__("line %d: %s" % (lineno, message))
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Instance:
    """
    Box-constrained least-squares instance.

    `u` may contain ``inf``; an instance whose bounds are all infinite is a
    nonnegative least-squares (NNLS) problem.
    """

    A: np.ndarray
    b: np.ndarray
    u: np.ndarray = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float, copy=True)
        b = np.array(self.b, dtype=float, copy=True)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError("A must be a non-empty 2-d matrix")
        m, n = A.shape
        if self.u is None:
            u = np.full(n, np.inf)
        else:
            u = np.array(self.u, dtype=float, copy=True)
        if b.shape != (m,):
            raise ValueError("b has shape %s, expected (%d,)" % (b.shape, m))
        if u.shape != (n,):
            raise ValueError("u has shape %s, expected (%d,)" % (u.shape, n))
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("A and b must be finite")
        if np.any(np.isnan(u)) or np.any(u <= 0):
            raise ValueError("upper bounds must lie in (0, inf]")
        for arr in (A, b, u):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "u", u)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def finite_upper(self):
        """Boolean mask of coordinates with a finite upper bound."""
        return np.isfinite(self.u)

    @property
    def is_nnls(self):
        return not np.any(self.finite_upper)

    @property
    def all_bounded(self):
        return bool(np.all(self.finite_upper))

    def objective(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (np.array_equal(self.A, other.A)
                and np.array_equal(self.b, other.b)
                and np.array_equal(self.u, other.u))

    __hash__ = None


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Parameters of a random instance.

    `feasibility` is ``None`` for a uniformly random ``b`` or the sparsity
    ``chi`` in ``(0, 1]`` for a planted feasible ``b = sum_{j in J} A^j z_j``.
    """

    shape: str
    m: int
    n: int
    capacitated: bool = False
    feasibility: float = None
    seed: int = 0

    def __post_init__(self):
        if self.shape not in ("rectangular", "near-square"):
            raise ValueError("shape must be 'rectangular' or 'near-square'")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if self.shape == "rectangular" and self.n < 2 * self.m:
            raise ValueError(
                "rectangular instances need n >= 2m (got m=%d, n=%d)"
                % (self.m, self.n))
        if self.shape == "near-square" and not (
                self.m <= self.n <= round(1.1 * self.m)):
            raise ValueError(
                "near-square instances need m <= n <= 1.1m (got m=%d, n=%d)"
                % (self.m, self.n))
        if self.feasibility is not None and not 0 < self.feasibility <= 1:
            raise ValueError("sparsity chi must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def near_square_sizes(m):
    """Column counts ``1.02m, 1.05m, 1.1m`` rounded to integers."""
    return [int(round(f * m)) for f in (1.02, 1.05, 1.1)]


def generate(spec):
    """
    Draw a random instance.

    Four independent PCG64 streams are spawned from ``spec.seed`` in the
    fixed order (A, b, J, z), so e.g. changing ``feasibility`` leaves ``A``
    unchanged.
    """
    rng_A, rng_b, rng_J, rng_z = (
        np.random.Generator(np.random.PCG64(s))
        for s in np.random.SeedSequence(spec.seed).spawn(4))
    m, n = spec.m, spec.n
    A = rng_A.uniform(-0.5, 0.5, size=(m, n))
    if spec.feasibility is None:
        b = rng_b.uniform(-0.5, 0.5, size=m)
    else:
        chosen = rng_J.random(n) < spec.feasibility
        z = rng_z.uniform(0.0, 1.0, size=n)
        b = A[:, chosen] @ z[chosen]
    u = np.ones(n) if spec.capacitated else np.full(n, np.inf)
    return Instance(A, b, u)


def incidence_instance(arcs, demands, capacities=None):
    """
    Network-flow instance from a directed graph.

    Nodes are numbered ``1..m`` with ``m = len(demands)``; column ``j`` of
    ``A`` has ``+1`` at the head of arc ``j`` and ``-1`` at its tail, so
    ``(A x)(i)`` is the net inflow at node ``i``.
    """
    demands = np.asarray(demands, dtype=float)
    m = demands.shape[0]
    A = np.zeros((m, len(arcs)))
    for j, (tail, head) in enumerate(arcs):
        if tail == head:
            raise ValueError("arc %d is a self-loop at node %d" % (j, tail))
        for node in (tail, head):
            if not 1 <= node <= m:
                raise ValueError(
                    "arc %d references node %d outside 1..%d" % (j, node, m))
        A[tail - 1, j] = -1.0
        A[head - 1, j] = 1.0
    return Instance(A, demands, capacities)


def _fmt(value):
    if math.isinf(value):
        return "inf"
    return "%.17g" % value


def write_instance(inst):
    """Serialize to the ``MNP 1`` text format."""
    lines = [FORMAT_HEADER, "%d %d" % (inst.m, inst.n)]
    lines.extend(" ".join(_fmt(v) for v in row) for row in inst.A)
    lines.append(" ".join(_fmt(v) for v in inst.b))
    lines.append(" ".join(_fmt(v) for v in inst.u))
    return "\n".join(lines) + "\n"


def _parse_reals(line, lineno, count, what, allow_inf=False):
    tokens = line.split()
    if len(tokens) != count:
        raise InstanceFormatError(
            lineno, "expected %d values for %s, found %d"
            % (count, what, len(tokens)))
    out = np.empty(count)
    for k, tok in enumerate(tokens):
        if allow_inf and tok == "inf":
            out[k] = np.inf
            continue
        try:
            out[k] = float(tok)
        except ValueError:
            raise InstanceFormatError(
                lineno, "non-numeric token %r in %s" % (tok, what)) from None
        if not math.isfinite(out[k]):
            raise InstanceFormatError(
                lineno, "non-finite token %r in %s" % (tok, what))
    return out


def read_instance(text):
    """Parse the ``MNP 1`` text format; raises `InstanceFormatError`."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise InstanceFormatError(1, "expected header %r" % FORMAT_HEADER)
    if len(lines) < 2:
        raise InstanceFormatError(2, "missing dimension line")
    dims = lines[1].split()
    try:
        m, n = (int(t) for t in dims)
    except ValueError:
        raise InstanceFormatError(
            2, "dimension line must be '<m> <n>'") from None
    if m < 1 or n < 1:
        raise InstanceFormatError(2, "dimensions must be positive")

    def line(lineno, what):
        if lineno > len(lines):
            raise InstanceFormatError(lineno, "missing line for %s" % what)
        return lines[lineno - 1]

    A = np.vstack([
        _parse_reals(line(3 + i, "row %d of A" % (i + 1)), 3 + i, n,
                     "row %d of A" % (i + 1))
        for i in range(m)])
    b = _parse_reals(line(m + 3, "b"), m + 3, m, "b")
    u = _parse_reals(line(m + 4, "u"), m + 4, n, "u", allow_inf=True)
    if len(lines) > m + 4:
        raise InstanceFormatError(m + 5, "unexpected trailing content")
    if np.any(u <= 0):
        raise InstanceFormatError(m + 4, "upper bounds must be positive")
    return Instance(A, b, u)


def load_instance(path):
    with open(path, encoding="utf-8") as fh:
        return read_instance(fh.read())


def save_instance(inst, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_instance(inst))
