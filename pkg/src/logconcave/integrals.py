"""Exact integrals of exp(affine) over simplices and polyhedra.

The basic identity is

    int_S exp(a . x + b) dx = d! vol(S) e^b  e[z_0, ..., z_d],   z_k = a . v_k,

where ``e[...]`` is the divided difference of ``exp`` at the vertex
exponents. Derivatives with respect to the vertex values are again divided
differences with repeated nodes, which gives barycentric moments cheaply.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import DegenerateSimplex, NotIntegrable, PreconditionViolated
from .geometry import Polytope, Simplex, simplex_volumes, triangulate

# node spread below which a Taylor series replaces the difference quotient
TAYLOR_SPREAD = 1.0
_TAYLOR_TERMS = 20


@dataclass(frozen=True)
class AffineForm:
    """x -> alpha . x + beta."""

    alpha: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, dtype=float)))
        object.__setattr__(self, "beta", float(self.beta))
        if not (np.all(np.isfinite(self.alpha)) and np.isfinite(self.beta)):
            raise ValueError("affine form must be finite")

    def __call__(self, x):
        return np.atleast_2d(x) @ self.alpha + self.beta


_TAYLOR_COEF = {}


def _taylor_dd(w):
    """e[w_0..w_m] for rows of small, centred nodes, via h_j(w)/(m+j)!."""
    N, m1 = w.shape
    m = m1 - 1
    coef = _TAYLOR_COEF.get(m)
    if coef is None:
        coef = _TAYLOR_COEF[m] = np.array([1.0 / factorial(m + j) for j in range(_TAYLOR_TERMS + 1)])
    H = np.zeros((_TAYLOR_TERMS + 1, N))
    H[0] = 1.0
    for v in range(m1):
        wv = w[:, v]
        for j in range(1, _TAYLOR_TERMS + 1):
            H[j] += wv * H[j - 1]
    return coef @ H


def exp_divdiff(z):
    """Divided differences of exp, row-wise.

    Parameters
    ----------
    z : array_like, shape (N, m+1) or (m+1,)
        Nodes; repeats are allowed (confluent case).

    Returns
    -------
    ndarray, shape (N,)
        ``e[z_0, ..., z_m]``. Nodes are sorted and a Newton table is built
        level by level; entries whose node spread is below
        ``TAYLOR_SPREAD`` use a centred Taylor series instead of the
        quotient, so there is no cancellation for clustered nodes.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    N, m1 = z.shape
    zs = np.sort(z, axis=1)
    top = zs[:, -1:].copy()
    top[~np.isfinite(top)] = 0.0
    zs = zs - top  # all nodes <= 0, factor e^top back at the end
    out = np.empty(N)
    narrow = (-zs[:, 0]) < TAYLOR_SPREAD
    if np.any(narrow):
        # whole row in one centred series
        sub = zs[narrow]
        c = sub.mean(axis=1)
        out[narrow] = np.exp(c) * _taylor_dd(sub - c[:, None])
    if np.all(narrow):
        out = out * np.exp(top[:, 0])
        return out[0] if single else out
    wide = ~narrow
    zs = zs[wide]
    T = np.exp(zs)  # level 0
    for k in range(1, m1):
        spread = zs[:, k:] - zs[:, :-k]  # (N, m1-k)
        with np.errstate(invalid="ignore", divide="ignore"):
            Q = (T[:, 1:] - T[:, :-1]) / spread
        small = spread < TAYLOR_SPREAD
        if np.any(small):
            rows, cols = np.nonzero(small)
            idx = cols[:, None] + np.arange(k + 1)[None, :]
            sub = zs[rows[:, None], idx]
            c = sub.mean(axis=1)
            Q[rows, cols] = np.exp(c) * _taylor_dd(sub - c[:, None])
        T = Q
    out[wide] = T[:, 0]
    out = out * np.exp(top[:, 0])
    return out[0] if single else out


def simplex_exp_integrals(V, z):
    """Batch of int_S exp(l) where ``l`` has values ``z`` at the vertices.

    Parameters
    ----------
    V : ndarray, shape (N, d+1, d)
    z : ndarray, shape (N, d+1)
    """
    V = np.asarray(V, dtype=float)
    d = V.shape[-1]
    vol = simplex_volumes(V)
    return factorial(d) * vol * exp_divdiff(z)


def simplex_exp_barycentric(vol, z):
    """First barycentric moments: int_S lambda_k exp(l), shape (N, d+1).

    ``vol`` are the simplex volumes and ``z`` the vertex values of ``l``.
    """
    N, m1 = z.shape
    d = m1 - 1
    # one batched call: rows (z, z_k) for every k
    Z = np.concatenate([np.repeat(z[:, None, :], m1, axis=1), z[:, :, None]], axis=2)
    out = exp_divdiff(Z.reshape(N * m1, m1 + 1)).reshape(N, m1)
    return factorial(d) * vol[:, None] * out


def simplex_exp_barycentric2(vol, z):
    """Second barycentric moments int_S lambda_k lambda_l exp(l), (N, d+1, d+1)."""
    N, m1 = z.shape
    d = m1 - 1
    K, L = np.triu_indices(m1)
    # one batched call: rows (z, z_k, z_l) for every k <= l
    Z = np.concatenate([np.repeat(z[:, None, :], len(K), axis=1),
                        z[:, K][:, :, None], z[:, L][:, :, None]], axis=2)
    v = exp_divdiff(Z.reshape(-1, m1 + 2)).reshape(N, len(K))
    v = np.where(K == L, 2.0 * v, v)
    out = np.empty((N, m1, m1))
    out[:, K, L] = v
    out[:, L, K] = v
    return factorial(d) * vol[:, None, None] * out


def _as_simplex(s):
    if isinstance(s, Simplex):
        return s
    return Simplex(s)


def exp_affine_integral(s, a):
    """int_s exp(alpha . x + beta) dx over a simplex.

    Parameters
    ----------
    s : Simplex or array_like (d+1, d)
    a : AffineForm

    Examples
    --------
    >>> exp_affine_integral(Simplex([[0, 0], [1, 0], [0, 1]]), AffineForm([1, 0]))
    0.718281828...
    """
    s = _as_simplex(s)
    z = s.vertices @ a.alpha
    return float(factorial(s.dim) * s.volume * np.exp(a.beta) * exp_divdiff(z))


def moment_exp_affine_integral(s, a):
    """int_s x exp(alpha . x + beta) dx, returned as a length-d vector."""
    s = _as_simplex(s)
    z = (s.vertices @ a.alpha)[None]
    lam = simplex_exp_barycentric(np.array([s.volume]), z)[0]
    return np.exp(a.beta) * lam @ s.vertices


def second_moment_exp_affine_integral(s, a):
    """int_s x x^T exp(alpha . x + beta) dx, a (d, d) matrix."""
    s = _as_simplex(s)
    z = (s.vertices @ a.alpha)[None]
    L2 = simplex_exp_barycentric2(np.array([s.volume]), z)[0]
    return np.exp(a.beta) * s.vertices.T @ L2 @ s.vertices


# ----------------------------------------------------------------------
# polyhedral supports

def is_integrable(K, alpha, tol=1e-12):
    """exp(alpha . x) is integrable over K iff alpha . u < 0 on every ray."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if K.is_bounded:
        return True
    return bool(np.all(K.rays @ alpha < -tol))


def _simplex_batch(cells):
    S = [s.vertices for c in cells for s in triangulate(c)]
    return np.array(S)


def _integrate_bounded(P, a, order=0):
    """Integral (order 0), first moment (1) or second moment (2) over bounded P."""
    S = _simplex_batch([P])
    z = S @ a.alpha
    vol = simplex_volumes(S)
    eb = np.exp(a.beta)
    if order == 0:
        return eb * float(np.sum(factorial(P.dim) * vol * exp_divdiff(z)))
    if order == 1:
        lam = simplex_exp_barycentric(vol, z)
        return eb * np.einsum("nk,nkd->d", lam, S)
    L2 = simplex_exp_barycentric2(vol, z)
    return eb * np.einsum("nki,nkl,nlj->ij", S, L2, S)


def truncated_pieces(K, alpha, T):
    """K ∩ {alpha . x >= -T}: the part where the exponent exceeds -T."""
    return K.with_halfspace(-np.asarray(alpha, dtype=float), T)


def _grow(K, a, order, rtol=1e-10, max_doublings=40):
    if K.is_bounded:
        return _integrate_bounded(K, a, order)
    if not is_integrable(K, a.alpha):
        raise NotIntegrable("alpha . u >= 0 for some recession ray u")
    top = float(np.max(K.vertices @ a.alpha))
    T = max(1.0, -top + 1.0)
    prev = None
    for _ in range(max_doublings):
        P = truncated_pieces(K, a.alpha, T)
        val = _integrate_bounded(P, a, order) if P is not None else 0.0
        if prev is not None:
            inc = np.max(np.abs(np.asarray(val) - np.asarray(prev)))
            if inc <= rtol * np.max(np.abs(val)) + 1e-300:
                return val
        prev = val
        T = 2.0 * T + 10.0
    return val


def integral(K, a, rtol=1e-10):
    """int_K exp(alpha . x + beta) dx for a polyhedron K.

    Unbounded sets are truncated by {alpha . x >= -T} with T grown until the
    relative increment falls below ``rtol``.

    Raises
    ------
    NotIntegrable
        When some recession direction u has alpha . u >= 0.
    """
    return float(_grow(K, a, 0, rtol))


def first_moment(K, a, rtol=1e-10):
    return np.asarray(_grow(K, a, 1, rtol))


def second_moment(K, a, rtol=1e-10):
    return np.asarray(_grow(K, a, 2, rtol))


def normalizer(K, a, rtol=1e-10):
    """Normalizing constant c_{K,alpha} = int_K exp(-alpha . x) dx.

    Follows the convention of log-1-affine densities
    f_{K,alpha}(x) = exp(-alpha . x) / c_{K,alpha}; ``a`` may be an
    AffineForm (its ``alpha`` is used with the minus sign and ``beta``
    ignored) or a plain vector.
    """
    alpha = a.alpha if isinstance(a, AffineForm) else np.atleast_1d(np.asarray(a, dtype=float))
    return integral(K, AffineForm(-alpha, 0.0), rtol)


# ----------------------------------------------------------------------
# slices of log-1-affine supports

def gamma_lower(d, t):
    """gamma(d, t) = 1 - e^{-t} sum_{l<d} t^l / l!."""
    return 1.0 - np.exp(-t) * sum(t ** l / factorial(l) for l in range(d))


@dataclass
class SlicedSupport:
    """Lower slice K+_{alpha,t} = K ∩ {alpha.x <= t} and slab K∩{t-1<=alpha.x<=t}."""

    base: Polytope
    alpha: np.ndarray
    t: float

    def lower(self):
        return self.base.with_halfspace(self.alpha, self.t)

    def slab(self):
        P = self.lower()
        if P is None:
            return None
        return P.with_halfspace(-np.asarray(self.alpha, dtype=float), 1.0 - self.t)


def min_on_support(K, alpha):
    """m_{K,alpha} = inf_K alpha . x (attained at a vertex when integrable)."""
    return float(np.min(K.vertices @ np.asarray(alpha, dtype=float)))


def slice_volume(K, alpha, t):
    P = SlicedSupport(K, np.asarray(alpha, dtype=float), t).lower()
    return 0.0 if P is None else P.volume


def slab_volume(K, alpha, t):
    P = SlicedSupport(K, np.asarray(alpha, dtype=float), t).slab()
    return 0.0 if P is None else P.volume


def slice_ratio_check(K, alpha, t):
    """Check gamma(d,t) <= vol(K+_{alpha,t}) / c_{K,alpha} <= e^t.

    Requires alpha != 0, t > 0, exp(-alpha . x) integrable on K, and
    min_K alpha . x = 0.

    Returns
    -------
    dict with ``ratio``, ``lower``, ``upper`` and ``holds``.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if t <= 0 or not np.any(alpha):
        raise PreconditionViolated("need t > 0 and alpha != 0")
    if not is_integrable(K, -alpha):
        raise PreconditionViolated("exp(-alpha . x) not integrable on K")
    m = min_on_support(K, alpha)
    if abs(m) > 1e-9 * (1 + np.abs(K.vertices).max()):
        raise PreconditionViolated("need min over K of alpha . x equal to 0")
    d = K.dim
    c = normalizer(K, alpha)
    ratio = slice_volume(K, alpha, t) / c
    lo, hi = gamma_lower(d, t), float(np.exp(t))
    return {"ratio": ratio, "lower": lo, "upper": hi,
            "holds": bool(lo - 1e-12 <= ratio <= hi + 1e-12)}


def slab_ratio_bound(d, s, t):
    """Upper bound factor (t^d - (t-1)^d) / (s^d - (s-1)^d) for slab volumes."""
    if not (1 <= s <= t - 1):
        raise PreconditionViolated("need 1 <= s <= t - 1")
    return (t ** d - (t - 1) ** d) / (s ** d - (s - 1) ** d)


__all__ = [
    "AffineForm", "SlicedSupport", "exp_divdiff", "simplex_exp_integrals",
    "simplex_exp_barycentric", "simplex_exp_barycentric2", "exp_affine_integral",
    "moment_exp_affine_integral", "second_moment_exp_affine_integral",
    "integral", "first_moment", "second_moment", "normalizer", "is_integrable",
    "gamma_lower", "slice_ratio_check", "slab_ratio_bound", "slab_volume",
    "slice_volume", "DegenerateSimplex",
]
