"""Dense least-squares kernels shared by the solver, baselines and oracle.

All solves go through a singular value decomposition, which doubles as the
rank-revealing factorization: singular values below ``RANK_TOL`` times the
largest one are treated as zero.
"""

import numpy as np

__all__ = [
    "RANK_TOL",
    "mat_vec",
    "min_norm_least_squares",
    "weighted_constrained_ls",
    "spectral_norm",
    "numerical_rank",
    "pseudoinverse",
]

RANK_TOL = 1e-10
POWER_ITER_CAP = 5000


def _as_matrix(B):
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("expected a 2-d matrix, got shape %s" % (B.shape,))
    return B


def _as_vector(v, length, name):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != length:
        raise ValueError(
            "%s has shape %s, expected (%d,)" % (name, v.shape, length))
    return v


def mat_vec(A, v):
    """Return ``A @ v`` after checking that the dimensions agree."""
    A = _as_matrix(A)
    v = _as_vector(v, A.shape[1], "v")
    return A @ v


def _svd_rank(s):
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_TOL * s[0]))


def numerical_rank(B):
    """Rank of `B` under the shared relative cutoff ``RANK_TOL``."""
    B = _as_matrix(B)
    if B.size == 0:
        return 0
    return _svd_rank(np.linalg.svd(B, compute_uv=False))


def pseudoinverse(B):
    """Moore-Penrose pseudoinverse under the ``RANK_TOL`` cutoff."""
    B = _as_matrix(B)
    m, k = B.shape
    if B.size == 0:
        return np.zeros((k, m))
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    r = _svd_rank(s)
    return (Vt[:r].T / s[:r]) @ U[:, :r].T


def min_norm_least_squares(B, rhs):
    """
    Minimum-norm minimizer of ``||B w - rhs||``.

    Parameters
    ----------
    B : array_like, shape (m, k)
        Coefficient matrix; ``k`` may be zero.
    rhs : array_like, shape (m,)
        Right-hand side.

    Returns
    -------
    w : ndarray, shape (k,)
        The pseudoinverse solution. Rank deficiency is handled by discarding
        singular values below ``RANK_TOL`` relative to the largest.
    """
    B = _as_matrix(B)
    m, k = B.shape
    rhs = _as_vector(rhs, m, "rhs")
    if k == 0:
        return np.zeros(0)
    if m == 0:
        return np.zeros(k)
    w, *_ = np.linalg.lstsq(B, rhs, rcond=RANK_TOL)
    return w


def weighted_constrained_ls(B, rhs, anchor, weights):
    """
    Among the minimizers of ``||B w - rhs||`` return the one closest to
    `anchor` in the norm ``||diag(weights) (w - anchor)||``.

    The least-squares solution set is ``w0 + null(B)`` with ``w0`` the
    pseudoinverse solution; both come from one SVD of `B`, so the rank
    decision is made on the unweighted matrix. The member nearest to the
    anchor is then a full-column-rank weighted problem over the null space
    coordinates.
    """
    B = _as_matrix(B)
    m, k = B.shape
    rhs = _as_vector(rhs, m, "rhs")
    anchor = _as_vector(anchor, k, "anchor")
    weights = _as_vector(weights, k, "weights")
    if k == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError("weights must be strictly positive and finite")

    U, s, Vt = np.linalg.svd(B, full_matrices=True)
    r = _svd_rank(s)
    w0 = Vt[:r].T @ ((U[:, :r].T @ rhs) / s[:r])
    if r == k:
        return w0
    Z = Vt[r:].T
    DZ = weights[:, None] * Z
    c, *_ = np.linalg.lstsq(DZ, weights * (anchor - w0), rcond=None)
    return w0 + Z @ c


def spectral_norm(A, rtol=1e-13, max_iter=POWER_ITER_CAP):
    """
    Largest singular value of `A` by power iteration on ``A.T @ A``.

    Iteration stops once the Rayleigh quotient changes by less than `rtol`
    relative, or after `max_iter` steps, in which case the value is taken
    from a full SVD instead.
    """
    A = _as_matrix(A)
    if A.size == 0 or not np.any(A):
        return 0.0
    n = A.shape[1]
    # deterministic start that is not orthogonal to the top singular vector
    # except on a measure-zero set
    v = np.random.default_rng(0x5EED).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            break
        v = w / nrm
        if abs(lam_new - lam) <= rtol * lam_new:
            return float(np.sqrt(nrm))
        lam = lam_new
    return float(np.linalg.norm(A, 2))
