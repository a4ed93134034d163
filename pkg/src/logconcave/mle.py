"""Log-concave maximum likelihood estimation (d = 1, 2; d = 3 optional).

The estimator is parametrized by heights ``y`` at the (deduplicated) data
sites. The tent function h_y is the least concave majorant of the lifted
points (X_i, y_i), and the convex objective is

    sigma(y) = -(1/n) sum_i w_i y_i + int exp(h_y).

Solvers
-------
d = 1: an active-set Newton method. Only a subset of sites (the knots)
carries free heights and every other site sits on the tent of the knots.
For fixed knots the objective is smooth, so Newton steps converge
quadratically; knots that fall below the tent drop out and a site is
promoted when raising it off the tent has negative one-sided slope.

d >= 2: the optimum typically has most sites as knots and many flat
non-simplicial faces, so knot-level methods stall. Shor's r-algorithm
(subgradient steps with space dilation) brings the heights close to the
optimum; a polish stage then fixes the regular triangulation through all
sites induced by the current heights and minimizes the smooth objective of
that triangulation under the concavity constraints by a log-barrier Newton
method, with a short r-algorithm restart to confirm the structure.

Plain c / sqrt(k) subgradient descent is kept as an alternative. A final
Newton step over affine tilts y + a.X + b makes the fit integrate to one
and match the sample mean exactly (both are stationarity conditions along
affine directions).
"""
from dataclasses import dataclass, field
from math import factorial
import time

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.spatial import ConvexHull

from .densities import Density, LogKAffineDensity, _rng, _split_simplex
from .errors import DegenerateInput, NotConverged
from .geometry import Polytope, affine_rank, convex_hull, simplex_volumes
from .integrals import (AffineForm, exp_divdiff, simplex_exp_barycentric,
                        simplex_exp_barycentric2)


@dataclass
class FitConfig:
    """Solver settings.

    Attributes
    ----------
    method : {"auto", "active_set", "ralg", "sqrtk"}
        ``auto`` picks ``active_set`` for d = 1 and ``ralg`` otherwise.
        ``active_set`` (d = 1 only) runs Newton steps on knot heights and
        inserts knots by one-sided slopes. ``ralg`` is Shor's
        space-dilation subgradient method and ``sqrtk`` plain best-iterate
        subgradient descent with step c / sqrt(k); both are followed by
        the barrier polish (if ``polish``), a snap to the tent and the
        affine tilt.
    max_iter : int
        Iteration cap of the active set or subgradient stage.
    tol : float
        Active set: Newton decrement and insertion-slope tolerance.
    ralg_tol : float
        Subgradient stage stops when the best value improves by less than
        this (relative) over ``patience`` iterations.
    polish_rounds, check_iter : int
        Barrier rounds and length of each confirming r-algorithm restart.
    gap_tol : float
        Duality gap at which the barrier stops.
    degeneracy_tol : float
        Data whose smallest normalized singular value falls below this are
        rejected as lying (nearly) on a hyperplane.
    """

    method: str = "auto"
    max_iter: int = 4000
    tol: float = 1e-11
    ralg_tol: float = 1e-9
    patience: int = 50
    dilation: float = 2.0
    polish: bool = True
    polish_rounds: int = 3
    check_iter: int = 100
    gap_tol: float = 1e-11
    degeneracy_tol: float = 1e-8


# ----------------------------------------------------------------------
# tents

def _upper_simplices(X, y):
    """Index triples/pairs of the upper hull facets of the lifted points."""
    n, d = X.shape
    if d == 1:
        order = np.argsort(X[:, 0], kind="stable")
        hull = []
        for i in order:
            while len(hull) >= 2:
                a, b = hull[-2], hull[-1]
                # remove b if it lies on or below segment a-i
                cross = (X[b, 0] - X[a, 0]) * (y[i] - y[a]) - (y[b] - y[a]) * (X[i, 0] - X[a, 0])
                if cross >= 0:
                    hull.pop()
                else:
                    break
            hull.append(i)
        return np.array([[hull[k], hull[k + 1]] for k in range(len(hull) - 1)], dtype=int)
    # one extra point far below the data keeps the lifted cloud full-dimensional
    span = max(np.ptp(y), 1.0)
    c = X.mean(axis=0)
    low = np.append(c, y.min() - 10.0 * span)
    P = np.vstack([np.column_stack([X, y]), low])
    hull = ConvexHull(P)
    eq = hull.equations
    up = eq[:, d] > 1e-12 * np.linalg.norm(eq[:, :d], axis=1).clip(1e-300)
    S = hull.simplices[up]
    S = S[np.all(S < n, axis=1)]
    V = X[S]
    vol = simplex_volumes(V)
    return S[vol > 1e-14 * max(vol.max(), 1e-300)]


def _forms(X, y, S):
    """Affine forms (alpha, beta) interpolating y on each simplex of S."""
    V = X[S]  # (m, d+1, d)
    m, d1, d = V.shape
    M = np.concatenate([V, np.ones((m, d1, 1))], axis=2)
    coef = np.linalg.solve(M, y[S][..., None])[..., 0]
    return coef[:, :d], coef[:, d]


class TentFunction:
    """Least concave majorant of lifted points, stored on a triangulation.

    Attributes
    ----------
    sites : ndarray (n, d)
    heights : ndarray (n,)
    simplices : ndarray (m, d+1) of site indices
    alpha, beta : per-simplex affine forms of the tent
    """

    def __init__(self, sites, heights, simplices=None):
        self.sites = np.atleast_2d(np.asarray(sites, dtype=float))
        if self.sites.shape[0] == 1 and np.ndim(sites) == 1:
            self.sites = self.sites.T
        self.heights = np.asarray(heights, dtype=float)
        self.dim = self.sites.shape[1]
        self.simplices = _upper_simplices(self.sites, self.heights) if simplices is None else simplices
        self.alpha, self.beta = _forms(self.sites, self.heights, self.simplices)
        self._hull = None

    @property
    def support_hull(self):
        if self._hull is None:
            used = np.unique(self.simplices)
            self._hull = convex_hull(self.sites[used])
        return self._hull

    @property
    def triangulation(self):
        return self.sites[self.simplices]

    def volumes(self):
        return simplex_volumes(self.sites[self.simplices])

    def __call__(self, x):
        """Tent value at x (min of the facet forms inside the hull)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            x = x.reshape(-1, self.dim)
        vals = np.min(x @ self.alpha.T + self.beta, axis=1)
        inside = self.support_hull.contains(x, tol=1e-10)
        return np.where(inside, vals, -np.inf)

    def at_sites(self):
        return self(self.sites)

    def integral(self):
        z = self.heights[self.simplices]
        return float(np.sum(factorial(self.dim) * self.volumes() * exp_divdiff(z)))

    def concavity_residuals(self):
        """For each interior facet: l_S1(q) - y_q (>= 0 iff concave there)."""
        D, _ = fold_matrix(self.sites, self.simplices)
        return D @ self.heights

    def pieces(self):
        out = []
        for s, a, b in zip(self.simplices, self.alpha, self.beta):
            out.append((AffineForm(a, b), convex_hull(self.sites[s])))
        return out


def upper_hull_tent(sites, heights):
    """Tent function of the lifted points (sites, heights).

    Raises
    ------
    DegenerateInput
        If fewer than d+1 affinely independent sites are given.
    """
    X = np.asarray(sites, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) < X.shape[1] + 1 or affine_rank(X) < X.shape[1]:
        raise DegenerateInput("need d+1 affinely independent sites")
    return TentFunction(X, heights)


def objective(tent, weights=None):
    """sigma(y) = -(1/n) sum w_i y_i + int exp(tent)."""
    w = np.ones(len(tent.heights)) if weights is None else np.asarray(weights, dtype=float)
    return float(-(w @ tent.heights) / w.sum() + tent.integral())


# ----------------------------------------------------------------------
# objective and subgradient for the solver

class _Problem:
    def __init__(self, X, w):
        self.X = X
        self.w = w
        self.n = w.sum()
        self.N, self.d = X.shape
        self.fact = factorial(self.d)
        self.calls = 0

    def value_grad(self, y):
        """sigma(y) and one subgradient."""
        self.calls += 1
        S = _upper_simplices(self.X, y)
        vol = simplex_volumes(self.X[S])
        z = y[S]
        val = -(self.w @ y) / self.n + float(np.sum(self.fact * vol * exp_divdiff(z)))
        lam = simplex_exp_barycentric(vol, z)
        g = -self.w / self.n
        np.add.at(g, S.ravel(), lam.ravel())
        return val, g, S


def _ralg(prob, y0, cfg, trace, h0=None, max_iter=None):
    """Shor's r-algorithm with adaptive step (space dilation factor cfg.dilation)."""
    N = len(y0)
    B = np.eye(N)
    y = y0.copy()
    f, g0, _ = prob.value_grad(y)
    best_f, best_y = f, y.copy()
    trace.append(f)
    h = h0 if h0 is not None else 1.0
    q1, q2, nh = 1.0, 1.1, 3
    coef = 1.0 / cfg.dilation - 1.0
    max_iter = cfg.max_iter if max_iter is None else max_iter
    hist = [best_f]
    it = 0
    for it in range(1, max_iter + 1):
        gt = B.T @ g0
        ng = np.linalg.norm(gt)
        if ng < 1e-15:
            break
        dx = B @ (gt / ng)
        ls, dstep, deriv = 0, 0.0, 1.0
        ndx = np.linalg.norm(dx)
        while deriv > 0 and ls < 200:
            y = y - h * dx
            dstep += h * ndx
            f, g1, _ = prob.value_grad(y)
            if f < best_f:
                best_f, best_y = f, y.copy()
            ls += 1
            if ls % nh == 0:
                h *= q2
            deriv = dx @ g1
        if ls == 1:
            h *= q1
        trace.append(best_f)
        hist.append(best_f)
        if dstep < 1e-13 * (1 + np.linalg.norm(y)):
            break
        r = B.T @ (g1 - g0)
        nr = np.linalg.norm(r)
        if nr > 1e-300:
            r /= nr
            B += coef * np.outer(B @ r, r)
        g0 = g1
        if len(hist) > cfg.patience:
            old = hist[-cfg.patience - 1]
            if abs(old - best_f) <= cfg.ralg_tol * max(1.0, abs(best_f)):
                break
    return best_y, best_f, it


def _sqrtk(prob, y0, cfg, trace, max_iter=None):
    """Best-iterate subgradient descent with step c / sqrt(k)."""
    y = y0.copy()
    f, g, _ = prob.value_grad(y)
    c = 1.0 / max(np.linalg.norm(g), 1e-300) * 0.1 * max(1.0, np.abs(y).max())
    best_f, best_y = f, y.copy()
    hist = [best_f]
    max_iter = cfg.max_iter if max_iter is None else max_iter
    k = 0
    for k in range(1, max_iter + 1):
        y = y - (c / np.sqrt(k)) * g / max(np.linalg.norm(g), 1e-300)
        f, g, _ = prob.value_grad(y)
        if f < best_f:
            best_f, best_y = f, y.copy()
        trace.append(best_f)
        hist.append(best_f)
        if len(hist) > cfg.patience:
            if abs(hist[-cfg.patience - 1] - best_f) <= cfg.ralg_tol * max(1.0, abs(best_f)):
                break
    return best_y, best_f, k


# ----------------------------------------------------------------------
# fixed-triangulation polish

def fold_matrix(X, S, return_keys=False):
    """Concavity constraints D y >= 0 across interior facets of S.

    For two simplices sharing a facet, the row evaluates the affine
    interpolant of the first simplex at the opposite vertex q of the
    second, minus y_q. Rows are scaled to unit Euclidean norm. With
    ``return_keys`` the shared facets (sorted vertex tuples) are returned
    as well.
    """
    m, d1 = S.shape
    faces = {}
    for k in range(m):
        s = S[k]
        for j in range(d1):
            key = tuple(sorted(np.delete(s, j)))
            faces.setdefault(key, []).append((k, s[j]))
    rows, cols, vals = [], [], []
    r = 0
    pairs = []
    keys = []
    for key, lst in faces.items():
        if len(lst) != 2:
            continue
        keys.append(key)
        (k1, p1), (k2, q) = lst
        s1 = S[k1]
        V = X[s1]
        M = np.vstack([V.T, np.ones(d1)])
        mu = np.linalg.solve(M, np.append(X[q], 1.0))
        coef = np.append(mu, -1.0)
        coef /= np.linalg.norm(coef)
        rows.extend([r] * (d1 + 1))
        cols.extend(list(s1) + [q])
        vals.extend(coef)
        pairs.append((k1, k2))
        r += 1
    D = sp.csr_matrix((vals, (rows, cols)), shape=(r, len(X)))
    pairs = np.array(pairs, dtype=int).reshape(-1, 2)
    if return_keys:
        return D, pairs, keys
    return D, pairs


def _snap(X, y):
    """Raise every height to the tent (only lowers sigma)."""
    t = TentFunction(X, y)
    return np.maximum(y, t.at_sites())


class _KnotState:
    """Tent through the knots K and everything the Newton step needs."""

    def __init__(self, X, w, K, yK):
        self.K_in = K
        n_all, d = X.shape
        Sl = _upper_simplices(X[K], yK)
        used = np.unique(Sl)
        self.K = K[used]
        loc = np.full(len(K), -1)
        loc[used] = np.arange(len(used))
        self.yK = yK[used]
        self.Sloc = loc[Sl]  # simplices in knot-local indices
        self.S = self.K[self.Sloc]
        V = X[self.S]
        M = np.concatenate([np.transpose(V, (0, 2, 1)), np.ones((len(V), 1, d + 1))], axis=1)
        self.Minv = np.linalg.inv(M)  # barycentric map per simplex
        coef = np.einsum("mkj,mk->mj", self.Minv, self.yK[self.Sloc])  # (m, d+1)
        self.alpha, self.beta = coef[:, :d], coef[:, d]
        vals = X @ self.alpha.T + self.beta
        self.cell = np.argmin(vals, axis=1)
        y = vals[np.arange(n_all), self.cell]
        y[self.K] = self.yK
        self.y = y
        self.vol = simplex_volumes(V)
        self.z = self.yK[self.Sloc]
        self.fact = factorial(d)
        self.value = float(-(w @ y) / w.sum() + np.sum(self.fact * self.vol * exp_divdiff(self.z)))
        mask = np.ones(n_all, bool)
        mask[self.K] = False
        self.free = np.nonzero(mask)[0]
        Xh = np.column_stack([X[self.free], np.ones(len(self.free))])
        self.mu = np.einsum("nkj,nj->nk", self.Minv[self.cell[self.free]], Xh)

    def model(self, w):
        """Gradient and Hessian of sigma in the knot heights (fixed combinatorics)."""
        n = w.sum()
        nk = len(self.K)
        g = np.zeros(nk)
        np.add.at(g, self.Sloc.ravel(), simplex_exp_barycentric(self.vol, self.z).ravel())
        data = w[self.K].astype(float)
        corners = self.Sloc[self.cell[self.free]]
        np.add.at(data, corners.ravel(), (w[self.free][:, None] * self.mu).ravel())
        g -= data / n
        H = np.zeros((nk, nk))
        L2 = simplex_exp_barycentric2(self.vol, self.z)
        d1 = self.Sloc.shape[1]
        r = np.repeat(self.Sloc, d1, axis=1).ravel()
        c = np.tile(self.Sloc, (1, d1)).ravel()
        np.add.at(H, (r, c), L2.ravel())
        return g, H

    def folds(self, X):
        """Fold rows (knot-local columns), their values and facet keys."""
        if len(self.Sloc) < 2:
            return np.zeros((0, len(self.K))), np.zeros(0), []
        D, _, keys = fold_matrix(X[self.K], self.Sloc, return_keys=True)
        D = D.toarray()
        keys = [tuple(sorted(self.K[list(k)])) for k in keys]
        return D, D @ self.yK, keys

    def insertion_slopes(self, w, inner_tol=1e-9):
        """One-sided derivative of sigma when a non-knot is raised off the tent.

        Raising site i inside simplex S star-splits S at i. The integral
        changes by int_S exp(h) phi_i, where phi_i is the hat of i in the
        split; the data term picks up every non-knot of S through phi_i.
        """
        n = w.sum()
        F = self.free
        out = np.full(len(F), np.inf)
        if len(F) == 0:
            return F, out
        mu = self.mu
        ok = mu.min(axis=1) > inner_tol
        cells = self.cell[F]
        zS = self.z[cells]  # (f, d+1)
        zi = self.y[F]
        d1 = zS.shape[1]
        integ = np.zeros(len(F))
        for j in range(d1):
            zz = zS.copy()
            zz[:, j] = zi
            integ += mu[:, j] * exp_divdiff(np.column_stack([zz, zi]))
        integ *= self.fact * self.vol[cells]
        data = w[F].astype(float).copy()
        order = np.argsort(cells, kind="stable")
        cs = cells[order]
        bounds = np.flatnonzero(np.diff(cs)) + 1
        for grp in np.split(order, bounds):
            if len(grp) < 2:
                continue
            m = mu[grp]
            with np.errstate(divide="ignore", invalid="ignore"):
                R = m[None, :, :] / m[:, None, :]  # [a, b, k] = nu_b,k / mu_a,k
            R[~np.isfinite(R)] = np.inf
            phi = np.clip(R.min(axis=2), 0.0, 1.0)
            np.fill_diagonal(phi, 0.0)
            data[grp] += phi @ w[F][grp]
        out[ok] = (integ - data / n)[ok]
        return F, out


def _active_set(X, w, cfg, trace):
    """Active-set Newton method over knot heights (d = 1).

    Knots carry free heights and every other site sits on the tent of the
    knots. For fixed knots the objective is smooth, so Newton steps with a
    line search on the true objective converge quadratically; a knot whose
    height falls below the tent of the others simply drops out. When the
    Newton decrement vanishes, every non-knot with negative insertion slope
    (at most one per segment) is promoted. Stops when no slope is negative.
    """
    hull = convex_hull(X)
    K = np.array([int(np.argmin(X[:, 0])), int(np.argmax(X[:, 0]))])
    yK = np.full(len(K), -np.log(hull.volume))
    st = _KnotState(X, w, K, yK)
    trace.append(st.value)
    lift = 1e-6
    it = 0
    converged = False
    for it in range(1, cfg.max_iter + 1):
        g, H = st.model(w)
        try:
            dy = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(H, -g, rcond=None)[0]
        dec = -(g @ dy)
        if dec > cfg.tol ** 2:
            t = 1.0
            while t > 1e-10:
                trial = _KnotState(X, w, st.K, st.yK + t * dy)
                if trial.value <= st.value - 1e-4 * t * dec:
                    break
                t *= 0.5
            if trial.value < st.value:
                st = trial
                trace.append(st.value)
                continue
        F, slope = st.insertion_slopes(w)
        if len(F) == 0 or slope.min() >= -cfg.tol:
            converged = True
            break
        bad = slope < -cfg.tol
        cells = st.cell[F]
        pick, seen = [], set()
        for i in np.argsort(slope):
            if not bad[i]:
                break
            if cells[i] in seen:
                continue
            seen.add(cells[i])
            pick.append(i)
        new = F[np.array(pick)]
        K = np.concatenate([st.K, new])
        yK = np.concatenate([st.yK, st.y[new] + lift * (1.0 + np.abs(st.y[new]))])
        st = _KnotState(X, w, K, yK)
        trace.append(st.value)
    return st.y, st.S, converged, it


class _Smooth:
    """sigma_T, its gradient and sparse Hessian on a fixed triangulation."""

    def __init__(self, X, w, S):
        self.X, self.w, self.S = X, w, S
        self.n = w.sum()
        self.N, self.d = X.shape
        self.vol = simplex_volumes(X[S])
        d1 = S.shape[1]
        self.rows = np.repeat(S, d1, axis=1).ravel()
        self.cols = np.tile(S, (1, d1)).ravel()

    def value(self, y):
        z = y[self.S]
        return -(self.w @ y) / self.n + float(np.sum(factorial(self.d) * self.vol * exp_divdiff(z)))

    def grad(self, y):
        lam = simplex_exp_barycentric(self.vol, y[self.S])
        g = -self.w / self.n
        np.add.at(g, self.S.ravel(), lam.ravel())
        return g

    def hess(self, y):
        L2 = simplex_exp_barycentric2(self.vol, y[self.S])
        return sp.csc_matrix((L2.ravel(), (self.rows, self.cols)), shape=(self.N, self.N))


def _barrier_newton(X, w, S, y0, gap_tol=1e-11, max_newton=300, mu_start=None):
    """Minimize sigma_T(y) subject to D y >= 0 by a log-barrier method.

    The barrier weight starts near the centring value for the initial
    slacks (or at ``mu_start``) and drops tenfold per stage until the
    duality gap ``mu * m`` is below ``gap_tol``. Returns (y, gap, steps).
    """
    sm = _Smooth(X, w, S)
    D, _ = fold_matrix(X, S)
    m = D.shape[0]
    y = y0.copy()
    s0 = D @ y
    if m and np.any(s0 <= 0):
        raise ValueError("barrier start is not strictly concave on T")
    if m == 0:
        mu = 0.0
    elif mu_start is None:
        mu = float(np.median(s0)) / len(y)
    else:
        mu = mu_start
    steps = 0

    def phi(v, mu):
        s = D @ v
        if m and np.any(s <= 0):
            return np.inf
        return sm.value(v) - (mu * np.sum(np.log(s)) if m else 0.0)

    while True:
        for _ in range(60):
            steps += 1
            s = D @ y
            g = sm.grad(y)
            H = sm.hess(y)
            if m:
                g = g - mu * (D.T @ (1.0 / s))
                H = H + mu * (D.T @ sp.diags(1.0 / s ** 2) @ D)
            try:
                dy = -splu(H.tocsc()).solve(g)
            except RuntimeError:
                dy = -g
            dec = -(g @ dy)
            if not np.isfinite(dec) or dec <= 0:
                dy = -g
                dec = g @ g
            if dec < max(1e-2 * mu * m, 1e-24):
                break
            t = 1.0
            if m:
                ds = D @ dy
                neg = ds < 0
                if np.any(neg):
                    t = min(1.0, 0.99 * float(np.min(-s[neg] / ds[neg])))
            f0 = phi(y, mu)
            while t > 1e-14:
                if phi(y + t * dy, mu) <= f0 - 0.25 * t * dec:
                    break
                t *= 0.5
            if t <= 1e-14:
                break
            y = y + t * dy
            if dec < 1e-22 or steps > max_newton:
                break
        if mu * m <= gap_tol or steps > max_newton:
            break
        mu *= 0.1
    return y, mu * m, steps


def _regular_triangulation(X, y, eps_rel=1e-7):
    """Triangulation using all sites: upper hull of y - eps |x - c|^2."""
    c = X.mean(axis=0)
    q = np.sum((X - c) ** 2, axis=1)
    scale = max(np.ptp(y), 1.0)
    eps = eps_rel * scale / max(q.max(), 1e-300)
    for _ in range(8):
        y0 = y - eps * q
        S = _upper_simplices(X, y0)
        if len(np.unique(S)) == len(X):
            D, _ = fold_matrix(X, S)
            if D.shape[0] == 0 or np.all(D @ y0 > 0):
                return S, y0
        eps *= 10
    raise NotConverged("could not build a triangulation through all sites")


def _polish(prob, X, w, y, cfg, trace):
    """Barrier Newton on the triangulation induced by y, with re-checks."""
    best_y = y
    best_f, _, _ = prob.value_grad(y)
    steps_total = 0
    gaps = []
    for _ in range(cfg.polish_rounds):
        ys = _snap(X, best_y)
        S, y0 = _regular_triangulation(X, ys)
        try:
            yp, gap, steps = _barrier_newton(X, w, S, y0, cfg.gap_tol)
        except (ValueError, RuntimeError):
            break
        steps_total += steps
        gaps.append(gap)
        fp, _, _ = prob.value_grad(yp)
        if fp > best_f:
            break
        best_y, best_f = yp, fp
        trace.append(best_f)
        # a short restart of the subgradient stage tests the structure
        yr, fr, it2 = _ralg(prob, best_y, cfg, trace, h0=1e-4, max_iter=cfg.check_iter)
        steps_total += it2
        if fr < best_f - 1e-12 * max(1.0, abs(best_f)):
            best_y, best_f = yr, fr
            continue
        break
    return best_y, steps_total, gaps


# ----------------------------------------------------------------------
# affine tilt

def _tilt(X, w, y, S):
    """Exact normalization and mean matching over y + a.X + b."""
    n = w.sum()
    xbar = (w @ X) / n
    vol = simplex_volumes(X[S])
    d = X.shape[1]
    V = X[S]
    a = np.zeros(d)

    def stats(a):
        z = (y + X @ a)[S]
        Z = float(np.sum(factorial(d) * vol * exp_divdiff(z)))
        lam = simplex_exp_barycentric(vol, z)
        m1 = np.einsum("nk,nkd->d", lam, V)
        L2 = simplex_exp_barycentric2(vol, z)
        m2 = np.einsum("nki,nkl,nlj->ij", V, L2, V)
        mean = m1 / Z
        return Z, mean, m2 / Z - np.outer(mean, mean)

    for _ in range(50):
        Z, mean, cov = stats(a)
        g = mean - xbar
        if np.max(np.abs(g)) < 1e-14 * (1 + np.abs(xbar).max()):
            break
        step = np.linalg.solve(cov, g)
        F0 = -a @ xbar + np.log(Z)
        t = 1.0
        while t > 1e-10:
            Zt = float(np.sum(factorial(d) * vol * exp_divdiff((y + X @ (a - t * step))[S])))
            if -(a - t * step) @ xbar + np.log(Zt) <= F0 - 1e-4 * t * (g @ step):
                break
            t *= 0.5
        a = a - t * step
    z = y + X @ a
    Z = float(np.sum(factorial(d) * vol * exp_divdiff(z[S])))
    return z - np.log(Z)


# ----------------------------------------------------------------------
# fit

@dataclass
class MLEFit:
    """Result of :func:`fit`.

    Attributes
    ----------
    log_density : TentFunction
        Normalized tent, log f_hat.
    integral : float
        int exp(log f_hat), one up to rounding.
    objective_trace : list of float
        Best objective value after each solver iteration.
    iterations : int
    converged : bool
    """

    log_density: TentFunction
    integral: float
    objective_trace: list
    iterations: int
    converged: bool
    weights: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def sites(self):
        return self.log_density.sites

    def logpdf(self, x):
        return self.log_density(x)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def objective(self):
        return objective(self.log_density, self.weights)

    def density(self):
        return TentDensity(self.log_density)

    def to_json(self):
        t = self.log_density
        return {"sites": t.sites.tolist(), "simplices": t.simplices.tolist(),
                "pieces": [{"alpha": a.tolist(), "beta": float(b),
                            "cell": {"vertices": t.sites[s].tolist(), "rays": []}}
                           for s, a, b in zip(t.simplices, t.alpha, t.beta)],
                "iterations": self.iterations, "converged": self.converged}


class TentDensity(LogKAffineDensity):
    """A normalized tent viewed as a piecewise log-affine density.

    Cells are the simplices of the tent triangulation; they are only turned
    into Polytope objects on demand.
    """

    name = "mle_fit"

    def __init__(self, tent):
        self.tent = tent
        self.dim = tent.dim
        self._alpha = tent.alpha
        self._beta = tent.beta
        self._cells = None
        self._support = tent.support_hull
        self._leaves = None

    @property
    def cells(self):
        if self._cells is None:
            self._cells = [convex_hull(self.tent.sites[s]) for s in self.tent.simplices]
        return self._cells

    def simplex_pieces(self):
        """(vertices (m, d+1, d), alpha, beta) of the triangulation."""
        return self.tent.triangulation, self._alpha, self._beta

    def logpdf(self, x):
        return self.tent(self._pts(x))

    def total_mass(self):
        return self.tent.integral()

    def moments(self):
        V, _, _ = self.simplex_pieces()
        vol = simplex_volumes(V)
        z = self.tent.heights[self.tent.simplices]
        Z = float(np.sum(factorial(self.dim) * vol * exp_divdiff(z)))
        lam = simplex_exp_barycentric(vol, z)
        L2 = simplex_exp_barycentric2(vol, z)
        mean = np.einsum("nk,nkd->d", lam, V) / Z
        m2 = np.einsum("nki,nkl,nlj->ij", V, L2, V) / Z
        return mean, m2 - np.outer(mean, mean)

    def _build_leaves(self, spread=1.0, tail=None):
        from .densities import _Leaf
        Vs, zs = [], []
        for V, z in zip(self.tent.triangulation, self.tent.heights[self.tent.simplices]):
            a, b = _split_simplex(V, z, spread)
            Vs.append(a)
            zs.append(b)
        V = np.concatenate(Vs)
        z = np.concatenate(zs)
        mass = factorial(self.dim) * simplex_volumes(V) * exp_divdiff(z)
        self._leaves = _Leaf(V, z, mass)

    def to_json(self):
        return {"pieces": [{"alpha": a.tolist(), "beta": float(b),
                            "cell": {"vertices": self.tent.sites[s].tolist(), "rays": []}}
                           for s, a, b in zip(self.tent.simplices, self._alpha, self._beta)]}


def _prepare(sample, degeneracy_tol):
    X = sample.points if hasattr(sample, "points") else sample
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n < d + 1:
        raise DegenerateInput(f"need at least d+1 = {d + 1} points")
    Xu, inv, cnt = np.unique(X, axis=0, return_inverse=True, return_counts=True)
    if len(Xu) < d + 1:
        raise DegenerateInput("fewer than d+1 distinct points")
    Q = Xu - Xu.mean(axis=0)
    s = np.linalg.svd(Q / max(np.abs(Q).max(), 1e-300), compute_uv=False)
    if s[-1] <= degeneracy_tol * s[0]:
        raise DegenerateInput("data lie (nearly) on a hyperplane")
    return Xu, cnt.astype(float), inv.ravel()


def fit(sample, config=None, **kw):
    """Log-concave maximum likelihood estimate.

    Parameters
    ----------
    sample : array_like (n, d) or Sample
    config : FitConfig, optional
        Keyword arguments override individual fields.

    Returns
    -------
    MLEFit
    """
    cfg = config or FitConfig()
    for k, v in kw.items():
        setattr(cfg, k, v)
    t0 = time.perf_counter()
    X, w, inv = _prepare(sample, cfg.degeneracy_tol)
    trace = []
    info = {}
    method = cfg.method
    if method == "auto":
        method = "active_set" if X.shape[1] == 1 else "ralg"
    if method == "active_set":
        if X.shape[1] != 1:
            raise ValueError("the active-set method is implemented for d = 1")
        y, S, converged, iters = _active_set(X, w, cfg, trace)
        info["knots"] = int(len(np.unique(S)))
    elif method in ("ralg", "sqrtk"):
        prob = _Problem(X, w)
        y0 = np.full(len(X), -np.log(convex_hull(X).volume))
        if method == "ralg":
            y, _, iters = _ralg(prob, y0, cfg, trace)
        else:
            y, _, iters = _sqrtk(prob, y0, cfg, trace)
        converged = iters < cfg.max_iter
        if cfg.polish:
            y, steps, gaps = _polish(prob, X, w, y, cfg, trace)
            iters += steps
            info["barrier_gaps"] = gaps
        y = _snap(X, y)
        S = _upper_simplices(X, y)
        info["oracle_calls"] = prob.calls
    else:
        raise ValueError(f"unknown method {cfg.method!r}")
    y = _tilt(X, w, y, S)
    tent = TentFunction(X, y, S)
    integral = tent.integral()
    trace.append(objective(tent, w))
    for i in range(1, len(trace)):
        trace[i] = min(trace[i], trace[i - 1])
    info["wall_ms"] = 1e3 * (time.perf_counter() - t0)
    info["site_index"] = inv
    return MLEFit(tent, integral, trace, int(iters), bool(converged and abs(integral - 1) < 1e-6),
                  w, info)


def fit_loglik_at_sample(fitres, sample):
    """log f_hat at the original sample points (duplicates included)."""
    X = sample.points if hasattr(sample, "points") else np.asarray(sample, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    return fitres.logpdf(X)
