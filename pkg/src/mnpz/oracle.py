"""Ground truth for small instances by exhaustive enumeration.

Everything here is exponential in the instance size and guarded by explicit
caps. Nothing in this module calls the solver; it is meant to check it.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .linalg import RANK_TOL, pseudoinverse, spectral_norm
from .updates import pg_direction
from .iterate import make_iterate

__all__ = [
    "MAX_BRUTE_N",
    "MAX_CIRCUIT_DIM",
    "OracleCapError",
    "OracleError",
    "OptimumCertificate",
    "CircuitCatalog",
    "ProximityReport",
    "ContractionReport",
    "brute_force_optimum",
    "enumerate_circuits",
    "conformal_decomposition",
    "nearest_optimal_points",
    "verify_proximity",
    "verify_proximity_many",
    "verify_contraction",
    "major_update_pairs",
]

MAX_BRUTE_N = 12
MAX_CIRCUIT_DIM = 16


class OracleCapError(ValueError):
    """Instance too large for exhaustive enumeration."""


class OracleError(RuntimeError):
    """An enumeration contradicted a structural fact it relies on."""


@dataclass(frozen=True, eq=False)
class OptimumCertificate:
    p_star: float
    b_star: np.ndarray
    x_star: np.ndarray
    kkt_residual: float
    n_optimal_partitions: int = 0


def _check_brute_cap(inst):
    if inst.n > MAX_BRUTE_N:
        raise OracleCapError(
            "partition enumeration is capped at n <= %d (got n=%d)"
            % (MAX_BRUTE_N, inst.n))


def _partition_blocks(inst):
    """
    Yield ``(J, F, S, P)`` for every free set ``J``.

    ``F`` are the remaining coordinates with finite upper bound; each column
    of the 0/1 matrix ``S`` chooses which of them sit at the upper bound
    (the rest of the complement of ``J`` sits at zero). ``P`` is the
    pseudoinverse of ``A[:, J]``.
    """
    n = inst.n
    finite = inst.finite_upper
    for mask in range(1 << n):
        inJ = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        J = np.flatnonzero(inJ)
        F = np.flatnonzero(~inJ & finite)
        K = 1 << F.size
        S = ((np.arange(K)[None, :] >> np.arange(F.size)[:, None]) & 1
             ).astype(float)
        yield J, F, S, pseudoinverse(inst.A[:, J])


def _fixed_part(inst, F, S):
    X = np.zeros((inst.n, S.shape[1]))
    if F.size:
        X[F] = inst.u[F, None] * S
    return X


def _violations(inst, X, J, F, S, G):
    """Per-column worst KKT violation given the partition encoded by J/F/S."""
    n = inst.n
    V = -G.copy()  # I0 rows: need g >= 0
    if J.size:
        V[J] = np.abs(G[J])
    if F.size:
        up = S.astype(bool)
        VF = V[F]
        VF[up] = G[F][up]
        V[F] = VF
    with np.errstate(invalid="ignore"):
        box = np.maximum(-X, X - inst.u[:, None])
    return np.max(V, axis=0, initial=-np.inf), np.max(box, axis=0, initial=0.0)


def brute_force_optimum(inst, tol=None):
    """
    Exact optimum by enumerating all partitions ``(I0, I1, J)``.

    For each partition the least-squares problem on the free coordinates is
    solved; candidates that are feasible and satisfy the KKT conditions are
    optimal. All of them must share the image ``A x``, which is asserted.
    The returned ``x_star`` is the candidate with the smallest violation.
    """
    _check_brute_cap(inst)
    A, b, u = inst.A, inst.b, inst.u
    bnorm = float(np.linalg.norm(b))
    if tol is None:
        tol = 1e-9 * (1.0 + bnorm)
    feas_tol = 1e-9 * np.where(np.isfinite(u), np.maximum(1.0, u), 1.0)

    best = None
    b_ref = None
    image_spread = 0.0
    count = 0
    for J, F, S, P in _partition_blocks(inst):
        X = _fixed_part(inst, F, S)
        rhs = b[:, None] - A @ X
        if J.size:
            X[J] = P @ rhs
        R = A @ X - b[:, None]
        G = A.T @ R
        kkt, box = _violations(inst, X, J, F, S, G)
        with np.errstate(invalid="ignore"):
            feas = np.all(X >= -feas_tol[:, None], axis=0) & np.all(
                X <= (u + feas_tol)[:, None], axis=0)
        ok = feas & (kkt <= tol)
        if not np.any(ok):
            continue
        cols = np.flatnonzero(ok)
        count += cols.size
        images = A @ X[:, cols]
        if b_ref is None:
            b_ref = images[:, 0].copy()
        image_spread = max(image_spread, float(
            np.max(np.abs(images - b_ref[:, None]))))
        score = np.maximum(kkt[cols], box[cols])
        k = int(np.argmin(score))
        if best is None or score[k] < best[0]:
            best = (float(score[k]), X[:, cols[k]].copy())

    if best is None:
        raise OracleError("no partition yields a KKT point")
    if image_spread > 1e-8 * (1.0 + bnorm):
        raise OracleError(
            "optimal candidates disagree on A x by %.3g" % image_spread)
    x_star = np.clip(best[1], 0.0, u)
    it = make_iterate(inst, x_star, 1e-12)
    x_star = it.x
    g = A.T @ it.residual
    viol = np.zeros(inst.n)
    viol[it.I0] = -g[it.I0]
    viol[it.I1] = g[it.I1]
    viol[it.J] = np.abs(g[it.J])
    return OptimumCertificate(
        p_star=it.objective,
        b_star=A @ x_star,
        x_star=x_star,
        kkt_residual=max(0.0, float(np.max(viol))),
        n_optimal_partitions=count,
    )


# -- circuits ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircuitCatalog:
    """
    Elementary vectors of ``ker(A | -I)``, one per circuit, scaled so that
    the entry of largest magnitude is ``+1``. The first ``n`` entries
    belong to the columns of ``A``, the last ``m`` to the identity block.
    """

    elementary_vectors: list
    supports: list
    kappa: float
    n: int
    m: int
    exact: bool = False
    kappa_exact: Fraction = field(default=None, repr=False)


def _exact_kernel(M):
    """Kernel basis of a rational matrix (list of rows) via RREF."""
    rows = [list(r) for r in M]
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][c]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * bb for a, bb in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -rows[i][fc]
        basis.append(vec)
    return basis


def _normalize_exact(vec):
    k = max(range(len(vec)), key=lambda i: (abs(vec[i]), -i))
    piv = vec[k]
    return [v / piv for v in vec]


def enumerate_circuits(A, exact=None):
    """
    All circuits of the extended subspace ``ker(A | -I_m)``.

    Supports of size up to ``rank + 1 = m + 1`` are tested; a support is a
    circuit exactly when the restricted kernel is one-dimensional and its
    generator has no zero entry. With integer `A` (or ``exact=True``) each
    float-detected circuit is recomputed in rational arithmetic, so that
    e.g. totally unimodular matrices give ``kappa == 1`` exactly.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    dim = n + m
    if dim > MAX_CIRCUIT_DIM:
        raise OracleCapError(
            "circuit enumeration is capped at n + m <= %d (got %d)"
            % (MAX_CIRCUIT_DIM, dim))
    if exact is None:
        exact = bool(np.all(A == np.round(A)))
    W = np.hstack([A, -np.eye(m)])
    Wq = None
    if exact:
        Wq = [[Fraction(int(v)) if v == int(v) else Fraction(v) for v in row]
              for row in W]
    vectors, supports = [], []
    kappa = Fraction(1) if exact else 1.0
    for size in range(1, m + 2):
        for S in combinations(range(dim), size):
            WS = W[:, S]
            _, s, Vt = np.linalg.svd(WS, full_matrices=True)
            rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s[0] > 0 else 0
            if rank != size - 1:
                continue
            v = Vt[-1]
            if np.min(np.abs(v)) <= 1e-9 * np.max(np.abs(v)):
                continue
            full = np.zeros(dim)
            if exact:
                basis = _exact_kernel([[row[j] for j in S] for row in Wq])
                if len(basis) != 1 or any(c == 0 for c in basis[0]):
                    continue
                q = _normalize_exact(basis[0])
                mags = [abs(c) for c in q]
                kappa = max(kappa, max(mags) / min(mags))
                full[list(S)] = [float(c) for c in q]
            else:
                k = int(np.argmax(np.abs(v)))
                v = v / v[k]
                mags = np.abs(v)
                kappa = max(kappa, float(np.max(mags) / np.min(mags)))
                full[list(S)] = v
            vectors.append(full)
            supports.append(S)
    return CircuitCatalog(
        elementary_vectors=vectors,
        supports=supports,
        kappa=float(kappa),
        n=n,
        m=m,
        exact=exact,
        kappa_exact=kappa if exact else None,
    )


def conformal_decomposition(A, v, catalog=None, return_extended=False):
    """
    Decompose ``(v, A v)`` into elementary vectors of ``ker(A | -I)`` that
    conform to it, and return their first ``n`` coordinates.

    Greedy peeling: take a catalog vector (or its negative) whose sign
    pattern fits inside the remainder, subtract the largest multiple that
    keeps conformity, repeat. A conic Caratheodory reduction then trims the
    list to at most ``n`` terms.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    v = np.asarray(v, dtype=float)
    if catalog is None:
        catalog = enumerate_circuits(A)
    ext = np.concatenate([v, A @ v])
    ztol = 1e-12 * max(1.0, float(np.max(np.abs(ext), initial=0.0)))
    r = np.where(np.abs(ext) <= ztol, 0.0, ext)
    terms = []
    cand = [(g, g != 0) for g in catalog.elementary_vectors]
    while np.any(r != 0):
        if len(terms) > n + m:
            raise OracleError("conformal peeling did not terminate")
        pick = None
        for g, supp in cand:
            for sgn in (1.0, -1.0):
                if np.all(r[supp] * (sgn * g[supp]) > 0):
                    pick = (sgn * g, supp)
                    break
            if pick is not None:
                break
        if pick is None:
            raise OracleError(
                "no conforming elementary vector for a nonzero remainder")
        h, supp = pick
        idx = np.flatnonzero(supp)
        ratios = r[idx] / h[idx]
        k = int(np.argmin(ratios))
        t = float(ratios[k])
        r = r - t * h
        r[idx[k]] = 0.0
        r[np.abs(r) <= ztol] = 0.0
        terms.append(t * h)

    terms = _caratheodory(terms, n)
    if return_extended:
        return terms
    return [h[:n].copy() for h in terms]


def _caratheodory(terms, dim):
    coef = np.ones(len(terms))
    vecs = list(terms)
    while len(vecs) > dim:
        M = np.column_stack(vecs)
        _, _, Vt = np.linalg.svd(M)
        mu = Vt[-1]
        if not np.any(mu > 0):
            mu = -mu
        pos = mu > 1e-14 * np.max(np.abs(mu))
        theta = float(np.min(coef[pos] / mu[pos]))
        coef = coef - theta * mu
        keep = coef > 1e-14
        vecs = [vv for vv, kk in zip(vecs, keep) if kk]
        coef = coef[keep]
    return [c * vv for c, vv in zip(coef, vecs)]


# -- proximity --------------------------------------------------------------


@dataclass(frozen=True)
class ProximityReport:
    passed: bool
    linf_distance: float
    linf_bound: float
    l2_distance: float
    l2_bound: float

    @property
    def ratio(self):
        if self.linf_bound == 0.0:
            return 0.0 if self.linf_distance == 0.0 else np.inf
        return self.linf_distance / self.linf_bound


def nearest_optimal_points(inst, b_star, X):
    """
    Euclidean projection of each column of `X` onto the optimal set
    ``{y in box : A y = b_star}``, by enumerating the face the projection
    lies on.
    """
    _check_brute_cap(inst)
    A, u = inst.A, inst.u
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != inst.n:
        X = X.T
    P_count = X.shape[1]
    cons_tol = 1e-9 * (1.0 + float(np.linalg.norm(b_star)))
    feas_tol = 1e-9 * np.where(np.isfinite(u), np.maximum(1.0, u), 1.0)
    best_d = np.full(P_count, np.inf)
    best_Y = np.full_like(X, np.nan)
    for J, F, S, P in _partition_blocks(inst):
        base = _fixed_part(inst, F, S)            # n x K
        K = base.shape[1]
        rhs = b_star[:, None] - A @ base          # m x K
        Y = np.repeat(base, P_count, axis=1)      # n x (K*P), K-major
        if J.size:
            AJ = A[:, J]
            XJ = X[J]                             # |J| x P
            corr = P @ (np.repeat(rhs, P_count, axis=1)
                        - np.tile(AJ @ XJ, (1, K)))
            Y[J] = np.tile(XJ, (1, K)) + corr
            res = AJ @ Y[J] - np.repeat(rhs, P_count, axis=1)
        else:
            res = np.repeat(rhs, P_count, axis=1)
        ok = np.max(np.abs(res), axis=0, initial=0.0) <= cons_tol
        with np.errstate(invalid="ignore"):
            ok &= np.all(Y >= -feas_tol[:, None], axis=0)
            ok &= np.all(Y <= (u + feas_tol)[:, None], axis=0)
        if not np.any(ok):
            continue
        D = np.linalg.norm(Y - np.tile(X, (1, K)), axis=0)
        D[~ok] = np.inf
        D = D.reshape(K, P_count)
        k = np.argmin(D, axis=0)
        d = D[k, np.arange(P_count)]
        better = d < best_d
        if np.any(better):
            cols = k[better] * P_count + np.flatnonzero(better)
            best_Y[:, better] = Y[:, cols]
            best_d[better] = d[better]
    if not np.all(np.isfinite(best_d)):
        raise OracleError("optimal set appears empty for some point")
    return np.clip(best_Y, 0.0, u[:, None])


def verify_proximity_many(inst, X, cert, catalog, slack=1e-8):
    """
    Check ``||x - x*||_inf <= kappa ||A x - b*||_1`` and
    ``||x - x*||_2 <= m kappa ||A x - b*||_2`` for every column ``x`` of
    `X`, with ``x*`` the nearest optimal solution.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != inst.n:
        X = X.T
    Y = nearest_optimal_points(inst, cert.b_star, X)
    img = inst.A @ X - cert.b_star[:, None]
    kappa = catalog.kappa
    out = []
    for p in range(X.shape[1]):
        diff = X[:, p] - Y[:, p]
        linf = float(np.max(np.abs(diff)))
        l2 = float(np.linalg.norm(diff))
        bound_inf = kappa * float(np.sum(np.abs(img[:, p])))
        bound_2 = inst.m * kappa * float(np.linalg.norm(img[:, p]))
        out.append(ProximityReport(
            passed=linf <= bound_inf + slack and l2 <= bound_2 + slack,
            linf_distance=linf, linf_bound=bound_inf,
            l2_distance=l2, l2_bound=bound_2))
    return out


def verify_proximity(inst, x, cert, catalog, slack=1e-8):
    return verify_proximity_many(
        inst, np.asarray(x, dtype=float)[:, None], cert, catalog, slack)[0]


# -- contraction ------------------------------------------------------------


def major_update_pairs(report):
    """
    ``(x, y)`` for each major update in a solve recorded with
    ``record_points=True``: the stable point the update started from and
    the point it produced.
    """
    if report.x_start is None:
        raise ValueError("report has no start point")
    cur = report.x_start
    pairs = []
    for ev in report.trace:
        if ev.x is None:
            raise ValueError("solve was not run with record_points=True")
        if ev.cycle_kind == "major_update":
            pairs.append((cur, ev.x, ev.moved))
        cur = ev.x
    return pairs


@dataclass(frozen=True)
class ContractionReport:
    rule: str
    rho: float
    steps_checked: int
    violations: int
    z_bound_violations: int
    worst_ratio: float
    worst_z_ratio: float

    @property
    def passed(self):
        return self.violations == 0 and self.z_bound_violations == 0


def verify_contraction(inst, report, cert, catalog, rule=None, slack=1e-10):
    """
    Per-step geometric decrease of the optimality gap for the projected
    gradient and coordinate rules on NNLS instances:
    ``gap(y) <= rho gap(x)`` with
    ``rho = 1 - 1/(2 m^2 kappa^2 ||A||^2)`` (projected gradient) or
    ``1 - 1/(2 n m^2 kappa^2 ||A||^2)`` (coordinate). Alongside, the
    direction bound ``||z|| >= sqrt(gap(x)) / (sqrt(2) m kappa)`` is
    checked at every stable ``x``.

    `worst_ratio` is the largest ``gap(y) / (rho gap(x))`` seen and
    `worst_z_ratio` the largest ``bound / ||z||``.
    """
    if not inst.is_nnls:
        raise ValueError("contraction bound is stated for NNLS instances")
    _check_brute_cap(inst)
    rule = rule or report.method
    m, n = inst.m, inst.n
    kappa = catalog.kappa
    norm_A = spectral_norm(inst.A)
    denom = 2.0 * m * m * kappa * kappa * norm_A * norm_A
    if rule == "coordinate":
        denom *= n
    elif rule != "projected_gradient":
        raise ValueError("no contraction bound for rule %r" % rule)
    rho = 1.0 - 1.0 / denom

    checked = viol = zviol = 0
    worst = worst_z = 0.0
    for x, y, moved in major_update_pairs(report):
        it = make_iterate(inst, x)
        gap_x = max(0.0, it.objective - cert.p_star)
        z = pg_direction(inst, it)
        zn = float(np.linalg.norm(z))
        zb = np.sqrt(gap_x) / (np.sqrt(2.0) * m * kappa)
        if gap_x > 1e-14 * (1.0 + cert.p_star):
            worst_z = max(worst_z, zb / zn if zn > 0 else np.inf)
            if zn < zb * (1.0 - 1e-6):
                zviol += 1
        if not moved:
            continue
        checked += 1
        gap_y = inst.objective(y) - cert.p_star
        if gap_x > 0:
            worst = max(worst, gap_y / (rho * gap_x))
        if gap_y > rho * gap_x + slack:
            viol += 1
    return ContractionReport(rule, rho, checked, viol, zviol, worst, worst_z)
