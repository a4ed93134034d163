"""Density families: piecewise log-affine densities and named examples.

Every density exposes ``logpdf``, ``pdf``, ``sample``, ``moments`` and
``support_contains``. Smooth families also expose ``grad`` (gradient of
the density itself), which the separation certificates use.
"""
from dataclasses import dataclass, field
from math import factorial, gamma as gamma_fn, pi

import numpy as np
from scipy import integrate, optimize

from .errors import EmptyClass, NotConcave, DegenerateInput
from .geometry import (Polytope, hull_halfspaces, Simplex, Subdivision, convex_hull, gamma as gamma_count,
                       simplex_volumes, triangulate)
from .integrals import (AffineForm, first_moment, integral, is_integrable, second_moment)


def unit_ball_volume(d):
    """V_d = pi^{d/2} / Gamma(1 + d/2)."""
    return pi ** (d / 2) / gamma_fn(1 + d / 2)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass
class Sample:
    """Points drawn from a density together with their provenance."""

    points: np.ndarray
    seed: object = None
    source: str = ""

    def __len__(self):
        return len(self.points)


class Density:
    """Interface shared by all densities on R^d."""

    dim: int
    name: str = "density"

    def logpdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def support_contains(self, x):
        return np.isfinite(self.logpdf(x))

    def sample(self, n, seed=None):
        raise NotImplementedError

    def moments(self):
        raise NotImplementedError

    def grad(self, x, h=1e-5):
        """Central-difference gradient of the density."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = np.empty_like(x)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h
            g[:, j] = (self.pdf(x + e) - self.pdf(x - e)) / (2 * h)
        return g

    def _pts(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x.reshape(-1, self.dim) if self.dim > 1 else x.reshape(-1, 1)
        return x


def sample(f, n, seed=None):
    """Draw ``n`` points from ``f`` reproducibly; returns a :class:`Sample`."""
    return Sample(f.sample(n, seed), seed, getattr(f, "name", type(f).__name__))


def evaluate(f, x):
    return f.pdf(x)


def log_evaluate(f, x):
    return f.logpdf(x)


def moments(f):
    return f.moments()


# ----------------------------------------------------------------------
# piecewise log-affine densities

@dataclass
class _Leaf:
    V: np.ndarray  # (N, d+1, d) simplices
    z: np.ndarray  # (N, d+1) exponent at vertices
    mass: np.ndarray


class LogKAffineDensity(Density):
    """Density exp(alpha_j . x + beta_j) on cell E_j, zero off the cells.

    Parameters
    ----------
    pieces : list of (AffineForm, Polytope)
        Affine pieces and their cells. The cells must form a polyhedral
        subdivision of a convex support and the resulting log-density must be
        concave; the latter is probed at construction.
    normalize : bool
        Shift all intercepts jointly so that the density integrates to one.
    check : bool
        Run the concavity probe.

    Notes
    -----
    Because log f is concave and affine on each full-dimensional cell,
    every piece majorizes log f on the support, so log f = min_j l_j there.
    Evaluation uses that identity.
    """

    name = "log_k_affine"

    def __init__(self, pieces, normalize=False, check=True, seed=0):
        pieces = [(a if isinstance(a, AffineForm) else AffineForm(*a), c) for a, c in pieces]
        if not pieces:
            raise DegenerateInput("no pieces")
        self.dim = pieces[0][1].dim
        self._alpha = np.array([a.alpha for a, _ in pieces])
        self._beta = np.array([a.beta for a, _ in pieces])
        self.cells = [c for _, c in pieces]
        if normalize:
            tot = self.total_mass()
            self._beta = self._beta - np.log(tot)
        self._support = None
        self._leaves = None
        if check:
            self.check_concavity(seed=seed)

    # basic accessors
    @property
    def pieces(self):
        return [(AffineForm(a, b), c) for a, b, c in zip(self._alpha, self._beta, self.cells)]

    @property
    def support(self):
        return Subdivision(self.cells)

    @property
    def support_polytope(self):
        if self._support is None:
            V = np.vstack([c.vertices for c in self.cells])
            R = [c.rays for c in self.cells if len(c.rays)]
            if R:
                self._support = hull_halfspaces(V, np.vstack(R))
            else:
                self._support = convex_hull(V)
        return self._support

    @property
    def kappa(self):
        return len(minimal_pieces(self._alpha, self._beta))

    @property
    def gamma(self):
        return gamma_count(minimal_representation(self).cells)

    def cell_masses(self):
        return np.array([integral(c, AffineForm(a, b))
                         for a, b, c in zip(self._alpha, self._beta, self.cells)])

    def total_mass(self):
        return float(np.sum(self.cell_masses()))

    # evaluation
    def support_contains(self, x, tol=1e-9):
        return self.support_polytope.contains(self._pts(x), tol=tol)

    def logpdf(self, x):
        x = self._pts(x)
        vals = np.min(x @ self._alpha.T + self._beta, axis=1)
        return np.where(self.support_contains(x), vals, -np.inf)

    def locate(self, x, tol=1e-9):
        """Index of the first cell containing each point (-1 if none)."""
        x = self._pts(x)
        out = np.full(len(x), -1)
        for j, c in enumerate(self.cells):
            hit = (out < 0) & c.contains(x, tol=tol)
            out[hit] = j
        return out

    def logpdf_by_cell(self, x):
        """Evaluate by locating the containing cell (no concavity assumed)."""
        x = self._pts(x)
        j = self.locate(x)
        vals = np.full(len(x), -np.inf)
        ok = j >= 0
        vals[ok] = np.einsum("nd,nd->n", x[ok], self._alpha[j[ok]]) + self._beta[j[ok]]
        return vals

    def grad(self, x, h=None):
        x = self._pts(x)
        j = np.argmin(x @ self._alpha.T + self._beta, axis=1)
        g = self._alpha[j] * self.pdf(x)[:, None]
        return g

    def check_concavity(self, n_probe=1000, seed=0, tol=1e-9):
        """Probe log f(t x + (1-t) y) >= t log f(x) + (1-t) log f(y)."""
        rng = _rng(seed)
        X = self._probe_points(2 * n_probe, rng)
        x, y = X[:n_probe], X[n_probe:]
        t = rng.uniform(size=(n_probe, 1))
        m = t * x + (1 - t) * y
        lx, ly, lm = (self.logpdf_by_cell(p) for p in (x, y, m))
        ok = np.isfinite(lx) & np.isfinite(ly)
        viol = lm[ok] < (t[ok, 0] * lx[ok] + (1 - t[ok, 0]) * ly[ok]) - tol * (1 + np.abs(lm[ok]))
        if np.any(viol):
            raise NotConcave(f"{int(viol.sum())} of {int(ok.sum())} concavity probes failed")
        return True

    def _probe_points(self, n, rng):
        pts = []
        for c in self.cells:
            if c.is_bounded:
                V = c.vertices
            else:
                V = np.vstack([c.vertices, c.vertices[0] + 5.0 * c.rays])
            w = rng.dirichlet(np.ones(len(V)), size=max(2, n // len(self.cells) + 1))
            pts.append(w @ V)
        P = np.vstack(pts)
        return P[rng.permutation(len(P))[:n]] if len(P) >= n else P[rng.integers(0, len(P), n)]

    # moments
    def moments(self):
        mass = 0.0
        m1 = np.zeros(self.dim)
        m2 = np.zeros((self.dim, self.dim))
        for a, b, c in zip(self._alpha, self._beta, self.cells):
            form = AffineForm(a, b)
            mass += integral(c, form)
            m1 += first_moment(c, form)
            m2 += second_moment(c, form)
        mean = m1 / mass
        cov = m2 / mass - np.outer(mean, mean)
        return mean, cov

    # sampling
    def _build_leaves(self, spread=1.0, tail=40.0):
        Vs, zs = [], []
        top = -np.inf
        for a, b, c in zip(self._alpha, self._beta, self.cells):
            top = max(top, float(np.max(c.vertices @ a + b)))
        for a, b, c in zip(self._alpha, self._beta, self.cells):
            cell = c
            if not c.is_bounded:
                # drop the region where the density is below e^{-tail} of the peak
                cell = c.with_halfspace(-a, b - (top - tail))
                if cell is None:
                    continue
            for s in triangulate(cell):
                V, z = _split_simplex(s.vertices, s.vertices @ a + b, spread)
                Vs.append(V)
                zs.append(z)
        V = np.concatenate(Vs)
        z = np.concatenate(zs)
        vol = simplex_volumes(V)
        from .integrals import exp_divdiff
        mass = factorial(self.dim) * vol * exp_divdiff(z)
        self._leaves = _Leaf(V, z, mass)

    def sample(self, n, seed=None):
        """Choose a leaf simplex by exact mass, then rejection inside it.

        Rejected proposals are redrawn in the same leaf, so the leaf
        frequencies stay exact.
        """
        rng = _rng(seed)
        if self._leaves is None:
            self._build_leaves()
        L = self._leaves
        p = L.mass / L.mass.sum()
        idx = rng.choice(len(p), size=n, p=p)
        out = np.empty((n, self.dim))
        todo = np.arange(n)
        while len(todo):
            k = idx[todo]
            lam = rng.dirichlet(np.ones(self.dim + 1), size=len(todo))
            x = np.einsum("nk,nkd->nd", lam, L.V[k])
            zx = np.einsum("nk,nk->n", lam, L.z[k])
            acc = rng.uniform(size=len(todo)) < np.exp(zx - L.z[k].max(axis=1))
            out[todo[acc]] = x[acc]
            todo = todo[~acc]
        return out

    # serialization
    def to_json(self):
        return {"pieces": [{"alpha": a.tolist(), "beta": float(b), "cell": c.to_json()}
                           for a, b, c in zip(self._alpha, self._beta, self.cells)]}

    @classmethod
    def from_json(cls, obj, **kw):
        pieces = [(AffineForm(p["alpha"], p["beta"]), Polytope.from_json(p["cell"]))
                  for p in obj["pieces"]]
        return cls(pieces, **kw)

    def __repr__(self):
        return f"LogKAffineDensity(d={self.dim}, pieces={len(self.cells)})"


def _split_simplex(V, z, spread, max_depth=30):
    """Bisect longest exponent edges until every simplex has small spread."""
    todo = [(V, z, 0)]
    outV, outz = [], []
    d1 = len(z)
    while todo:
        V, z, depth = todo.pop()
        if np.ptp(z) <= spread or depth >= max_depth:
            outV.append(V)
            outz.append(z)
            continue
        diff = np.abs(z[:, None] - z[None, :])
        i, j = np.unravel_index(np.argmax(diff), diff.shape)
        mid = 0.5 * (V[i] + V[j])
        zm = 0.5 * (z[i] + z[j])
        for k in (i, j):
            V2, z2 = V.copy(), z.copy()
            V2[k], z2[k] = mid, zm
            todo.append((V2, z2, depth + 1))
    return np.array(outV).reshape(-1, d1, V.shape[1]), np.array(outz).reshape(-1, d1)


def minimal_pieces(alpha, beta, tol=1e-9):
    """Group indices of identical affine forms."""
    groups = []
    for i in range(len(beta)):
        for g in groups:
            j = g[0]
            if (np.max(np.abs(alpha[i] - alpha[j])) <= tol * (1 + np.max(np.abs(alpha[j])))
                    and abs(beta[i] - beta[j]) <= tol * (1 + abs(beta[j]))):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def minimal_representation(f, check=True):
    """Merge cells that carry the same affine form.

    For a concave piecewise affine log-density, the set where it agrees with
    a given piece is convex, so merged cells are convex hulls of the union.
    The output has pairwise distinct forms, which determines it uniquely up
    to ordering.
    """
    groups = minimal_pieces(f._alpha, f._beta)
    pieces = []
    for g in groups:
        cells = [f.cells[i] for i in g]
        if len(cells) == 1:
            cell = cells[0]
        else:
            V = np.vstack([c.vertices for c in cells])
            R = [c.rays for c in cells if len(c.rays)]
            cell = (Polytope.from_vertices_rays(V, np.vstack(R)) if R else convex_hull(V))
        pieces.append((AffineForm(f._alpha[g[0]], f._beta[g[0]]), cell))
    if check:
        vol_in = sum(_trunc_volume(c) for c in f.cells)
        vol_out = sum(_trunc_volume(c) for _, c in pieces)
        if abs(vol_in - vol_out) > 1e-6 * max(vol_in, 1.0):
            raise NotConcave("merged cells are not the union of the originals")
    return LogKAffineDensity(pieces, check=False)


def _trunc_volume(c, R=50.0):
    if c.is_bounded:
        return c.volume
    d = c.dim
    A = np.vstack([c.A, np.eye(d), -np.eye(d)])
    b = np.concatenate([c.b, np.full(2 * d, R)])
    return Polytope.from_halfspaces(A, b).volume


def min_affine_density(P, alpha, beta, normalize=True):
    """Density proportional to exp(min_j (alpha_j . x + beta_j)) on P.

    Cell j is the part of P where form j attains the minimum; forms that
    are never strictly minimal are dropped.
    """
    P = P if isinstance(P, Polytope) else convex_hull(P)
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta = np.asarray(beta, dtype=float).ravel()
    pieces = []
    for j in range(len(beta)):
        others = [k for k in range(len(beta)) if k != j]
        A = np.vstack([P.A] + [alpha[j] - alpha[k] for k in others]) if others else P.A
        b = np.concatenate([P.b, [beta[k] - beta[j] for k in others]]) if others else P.b
        try:
            cell = Polytope.from_halfspaces(A, b)
        except DegenerateInput:
            continue
        pieces.append((AffineForm(alpha[j], beta[j]), cell))
    return LogKAffineDensity(pieces, normalize=normalize)


def uniform_on(P):
    """Uniform density on a bounded polytope as a one-piece log-affine density."""
    P = P if isinstance(P, Polytope) else convex_hull(P)
    return LogKAffineDensity([(AffineForm(np.zeros(P.dim), -np.log(P.volume)), P)], check=False)


# ----------------------------------------------------------------------
# the class F^k(P^m)

def gauge_density(P):
    """f proportional to exp(-rho_P) for a polytope P with 0 in its interior.

    The cells are the cones from 0 over the facets of P; on the cone over
    facet {a . x <= b} the gauge equals a . x / b.
    """
    d = P.dim
    if not np.all(P.b > 0):
        raise DegenerateInput("0 must lie in the interior of P")
    pieces = []
    if d == 1:
        for a, b in zip(P.A, P.b):
            cell = Polytope.from_vertices_rays([[0.0]], [a])
            pieces.append((AffineForm(-a / b, 0.0), cell))
    else:
        tol = 1e-9 * P.scale()
        for a, b in zip(P.A, P.b):
            F = P.vertices[np.abs(P.vertices @ a - b) <= tol]
            cell = Polytope.from_vertices_rays(np.zeros((1, d)), F)
            pieces.append((AffineForm(-a / b, 0.0), cell))
    c = factorial(d) * P.volume
    pieces = [(AffineForm(a.alpha, -np.log(c)), cell) for a, cell in pieces]
    return LogKAffineDensity(pieces)


def centered_simplex(d):
    """conv{e_1, ..., e_d, -(1,...,1)}, whose barycentre is the origin."""
    V = np.vstack([np.eye(d), -np.ones((1, d))])
    return convex_hull(V)


def regular_polygon(k, r=1.0, phase=0.0):
    t = phase + 2 * pi * np.arange(k) / k
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def _lift_exponential(f):
    """(x, x_d) -> f(x) e^{-x_d} 1{x_d >= 0}, one dimension up."""
    d = f.dim + 1
    pieces = []
    for a, b, c in zip(f._alpha, f._beta, f.cells):
        A = np.vstack([np.column_stack([c.A, np.zeros(len(c.A))]), np.eye(d)[-1:] * -1.0])
        bb = np.append(c.b, 0.0)
        pieces.append((AffineForm(np.append(a, -1.0), b), Polytope.from_halfspaces(A, bb)))
    return LogKAffineDensity(pieces)


def make_fkm(k, m, d):
    """A density with exactly ``k`` affine pieces whose support has <= m facets.

    The class F^k(P^m) is non-empty iff k + m >= d + 1. For k <= d + 1 the
    construction multiplies lower-dimensional members by e^{-x_d} 1{x_d>=0}
    down to the base cases e^{-x} 1{x>=0} and exp(-rho_S) for a simplex S
    containing the origin. For k > d + 1 a gauge of a polytope with k facets
    (or, for d = 1, the negative maximum of k tangent lines) is used, whose
    support is all of R^d.

    Raises
    ------
    EmptyClass
        If k + m < d + 1.
    """
    if k < 1 or m < 0 or d < 1:
        raise ValueError("need k >= 1, m >= 0, d >= 1")
    if k + m < d + 1:
        raise EmptyClass(f"F^{k}(P^{m}) is empty in dimension {d}")
    if k <= d + 1:
        return _fkm_recursive(k, d)
    if d == 1:
        t = np.linspace(-1.0, 1.0, k)
        bps = 0.5 * (t[1:] + t[:-1])
        edges = np.concatenate([[-np.inf], bps, [np.inf]])
        pieces = []
        for j in range(k):
            lo, hi = edges[j], edges[j + 1]
            A, b = [], []
            if np.isfinite(hi):
                A.append([1.0]); b.append(hi)
            if np.isfinite(lo):
                A.append([-1.0]); b.append(-lo)
            pieces.append((AffineForm([-t[j]], t[j] ** 2 / 2), Polytope.from_halfspaces(A, b)))
        return LogKAffineDensity(pieces, normalize=True)
    if d == 2:
        return gauge_density(convex_hull(regular_polygon(k)))
    if d == 3:
        base = regular_polygon(k - 2)
        V = np.vstack([np.column_stack([base, -np.ones(k - 2)]),
                       np.column_stack([base, np.ones(k - 2)])])
        return gauge_density(convex_hull(V))
    raise ValueError("d must be 1, 2 or 3")


def _fkm_recursive(k, d):
    if k == 1 and d == 1:
        cell = Polytope.from_halfspaces([[-1.0]], [0.0])
        return LogKAffineDensity([(AffineForm([-1.0], 0.0), cell)])
    if k == d + 1:
        return gauge_density(centered_simplex(d))
    return _lift_exponential(_fkm_recursive(k, d - 1))


def support_facet_count(f):
    return f.support_polytope.facet_count


# ----------------------------------------------------------------------
# named densities

class GaussianDensity(Density):
    name = "gaussian"

    def __init__(self, mean=None, cov=None, d=None):
        if mean is None:
            mean = np.zeros(d or 1)
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.dim = len(self.mean)
        self.cov = np.eye(self.dim) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
        self._L = np.linalg.cholesky(self.cov)
        self._P = np.linalg.inv(self.cov)
        self._logc = -0.5 * self.dim * np.log(2 * pi) - np.sum(np.log(np.diag(self._L)))

    def logpdf(self, x):
        x = self._pts(x) - self.mean
        return self._logc - 0.5 * np.einsum("ni,ij,nj->n", x, self._P, x)

    def grad(self, x, h=None):
        x = self._pts(x)
        return -(self.pdf(x)[:, None]) * ((x - self.mean) @ self._P)

    def sample(self, n, seed=None):
        rng = _rng(seed)
        return self.mean + rng.standard_normal((n, self.dim)) @ self._L.T

    def moments(self):
        return self.mean.copy(), self.cov.copy()

    def params(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


class LaplaceDensity(Density):
    """(d! V_d)^{-1} exp(-||x||), covariance (d+1) I."""

    name = "laplace"

    def __init__(self, d=1):
        self.dim = d
        self._logc = -np.log(factorial(d) * unit_ball_volume(d))

    def logpdf(self, x):
        x = self._pts(x)
        return self._logc - np.linalg.norm(x, axis=1)

    def grad(self, x, h=None):
        x = self._pts(x)
        r = np.linalg.norm(x, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(r[:, None] > 0, x / r[:, None], 0.0)
        return -self.pdf(x)[:, None] * u

    def sample(self, n, seed=None):
        rng = _rng(seed)
        u = rng.standard_normal((n, self.dim))
        u /= np.linalg.norm(u, axis=1)[:, None]
        r = rng.gamma(self.dim, 1.0, size=n)
        return u * r[:, None]

    def moments(self):
        return np.zeros(self.dim), (self.dim + 1) * np.eye(self.dim)

    def params(self):
        return {"d": self.dim}


class BumpDensity(Density):
    """C exp(-1 / (1 - ||x||^2)) on the open unit ball."""

    name = "bump"

    def __init__(self, d=1):
        self.dim = d
        area = d * unit_ball_volume(d)
        g = lambda r, k: r ** (d - 1 + k) * np.exp(-1.0 / (1.0 - r * r)) if r < 1 else 0.0
        z0 = integrate.quad(g, 0, 1, args=(0,), epsabs=0, epsrel=1e-13, limit=200)[0]
        z2 = integrate.quad(g, 0, 1, args=(2,), epsabs=0, epsrel=1e-13, limit=200)[0]
        self.C = 1.0 / (area * z0)
        # E||X||^2 = d sigma^2
        self.sigma2 = z2 / z0 / d

    def logpdf(self, x):
        x = self._pts(x)
        r2 = np.sum(x * x, axis=1)
        with np.errstate(divide="ignore"):
            v = np.log(self.C) - 1.0 / np.where(r2 < 1, 1.0 - r2, np.nan)
        return np.where(r2 < 1, v, -np.inf)

    def grad(self, x, h=None):
        x = self._pts(x)
        r2 = np.sum(x * x, axis=1)
        f = self.pdf(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(r2 < 1, -2.0 / (1.0 - r2) ** 2, 0.0)
        return (f * fac)[:, None] * x

    def sample(self, n, seed=None):
        rng = _rng(seed)
        out = np.empty((0, self.dim))
        while len(out) < n:
            m = 3 * (n - len(out)) + 10
            x = UniformBall(self.dim).sample(m, rng)
            r2 = np.sum(x * x, axis=1)
            acc = rng.uniform(size=m) < np.exp(1.0 - 1.0 / (1.0 - r2))
            out = np.vstack([out, x[acc]])
        return out[:n]

    def moments(self):
        return np.zeros(self.dim), self.sigma2 * np.eye(self.dim)

    def params(self):
        return {"d": self.dim}


class UniformBall(Density):
    name = "uniform_ball"

    def __init__(self, d=1, center=None, radius=1.0):
        self.dim = d
        self.center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        self.radius = float(radius)
        self._logc = -np.log(unit_ball_volume(d) * radius ** d)

    def logpdf(self, x):
        x = self._pts(x)
        inside = np.linalg.norm(x - self.center, axis=1) <= self.radius
        return np.where(inside, self._logc, -np.inf)

    def grad(self, x, h=None):
        return np.zeros_like(self._pts(x))

    def sample(self, n, seed=None):
        rng = _rng(seed)
        u = rng.standard_normal((n, self.dim))
        u /= np.linalg.norm(u, axis=1)[:, None]
        r = self.radius * rng.uniform(size=n) ** (1.0 / self.dim)
        return self.center + u * r[:, None]

    def moments(self):
        return self.center.copy(), self.radius ** 2 / (self.dim + 2) * np.eye(self.dim)

    def params(self):
        return {"d": self.dim, "center": self.center.tolist(), "radius": self.radius}


class UniformPolytope(LogKAffineDensity):
    """Uniform density on a bounded polytope (one log-affine piece)."""

    name = "uniform_polytope"

    def __init__(self, P):
        P = P if isinstance(P, Polytope) else convex_hull(P)
        super().__init__([(AffineForm(np.zeros(P.dim), -np.log(P.volume)), P)], check=False)
        self.polytope = P

    def params(self):
        return {"vertices": self.polytope.vertices.tolist()}


class AffineTransformed(Density):
    """Density of M X + t when X ~ base."""

    def __init__(self, base, M, t=None):
        self.base = base
        self.dim = base.dim
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        self.t = np.zeros(self.dim) if t is None else np.atleast_1d(np.asarray(t, dtype=float))
        self._Minv = np.linalg.inv(self.M)
        self._logdet = np.log(abs(np.linalg.det(self.M)))
        self.name = f"affine({base.name})"

    def _back(self, x):
        return (self._pts(x) - self.t) @ self._Minv.T

    def logpdf(self, x):
        return self.base.logpdf(self._back(x)) - self._logdet

    def grad(self, x, h=None):
        g = self.base.grad(self._back(x))
        return g @ self._Minv / np.exp(self._logdet)

    def sample(self, n, seed=None):
        return self.base.sample(n, seed) @ self.M.T + self.t

    def moments(self):
        mu, S = self.base.moments()
        return self.M @ mu + self.t, self.M @ S @ self.M.T


class ThetaFloorDensity(Density):
    """exp(-s dist(x, B)) restricted to a polygon/interval P, normalized.

    B is a ball inside P. The rate ``s`` is chosen so that the infimum of the
    density over P equals 1 / (theta vol(P)), i.e. f >= f_P / theta on P
    with equality at the farthest vertex. Implemented for d in {1, 2}.
    """

    name = "theta_floor"

    def __init__(self, P, theta=None, center=None, radius=None, rate=None):
        self.P = P if isinstance(P, Polytope) else convex_hull(P)
        self.dim = self.P.dim
        if self.dim not in (1, 2):
            raise ValueError("theta_floor is implemented for d in {1, 2}")
        self.center = (self.P.vertices.mean(axis=0) if center is None
                       else np.atleast_1d(np.asarray(center, dtype=float)))
        inr = float(np.min(self.P.b - self.P.A @ self.center))
        if inr <= 0:
            raise DegenerateInput("ball centre must lie inside P")
        self.radius = 0.5 * inr if radius is None else float(radius)
        if self.radius >= inr:
            raise DegenerateInput("ball must lie in the interior of P")
        self._far = float(np.max(np.linalg.norm(self.P.vertices - self.center, axis=1))) - self.radius
        volP = self.P.volume
        if rate is not None:
            self.rate = float(rate)
        elif theta is None or theta <= 1:
            self.rate = 0.0
        else:
            # min density = e^{-s far} / Z(s) must equal 1/(theta volP)
            g = lambda s: -s * self._far - np.log(self._Z(s)) + np.log(theta * volP)
            hi = 1.0
            while g(hi) > 0:
                hi *= 2
            self.rate = optimize.brentq(g, 0.0, hi, xtol=1e-14, rtol=1e-14)
        self._logZ = np.log(self._Z(self.rate))
        self.theta = float(np.exp(self.rate * self._far + self._logZ) / volP)

    def _radial(self, s, k):
        """int_P g(x) (x - c)^k-type radial integrals; k in {0,1,2} (polar)."""
        r = self.radius
        if self.dim == 1:
            lo = self.P.vertices.min() - self.center[0]
            hi = self.P.vertices.max() - self.center[0]
            g = lambda u: u ** k * (1.0 if abs(u) <= r else np.exp(-s * (abs(u) - r)))
            pts = [p for p in (-r, r) if lo < p < hi]
            return integrate.quad(g, lo, hi, points=pts or None, epsabs=0, epsrel=1e-12, limit=200)[0]
        raise NotImplementedError

    def _ray_length(self, th):
        u = np.array([np.cos(th), np.sin(th)])
        au = self.P.A @ u
        slack = self.P.b - self.P.A @ self.center
        with np.errstate(divide="ignore"):
            t = np.where(au > 0, slack / au, np.inf)
        return float(np.min(t))

    def _polar(self, s, fun):
        """int over angle of int_0^{R(th)} fun(rho, th) g(rho) rho drho."""
        r = self.radius
        V = self.P.vertices - self.center
        breaks = np.sort(np.mod(np.arctan2(V[:, 1], V[:, 0]), 2 * pi))

        def inner(th):
            R = self._ray_length(th)
            a = integrate.quad(lambda p: fun(p, th) * p, 0, r, epsabs=0, epsrel=1e-12)[0]
            b = integrate.quad(lambda p: fun(p, th) * p * np.exp(-s * (p - r)), r, R,
                               epsabs=0, epsrel=1e-12)[0]
            return a + b

        edges = np.concatenate([[0.0], breaks, [2 * pi]])
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                tot += integrate.quad(inner, lo, hi, epsabs=0, epsrel=1e-11, limit=100)[0]
        return tot

    def _Z(self, s):
        if self.dim == 1:
            return self._radial(s, 0)
        return self._polar(s, lambda p, th: 1.0)

    def logpdf(self, x):
        x = self._pts(x)
        dist = np.maximum(np.linalg.norm(x - self.center, axis=1) - self.radius, 0.0)
        v = -self.rate * dist - self._logZ
        return np.where(self.P.contains(x, tol=1e-12), v, -np.inf)

    def sample(self, n, seed=None):
        rng = _rng(seed)
        base = UniformPolytope(self.P)
        out = np.empty((0, self.dim))
        while len(out) < n:
            m = 2 * (n - len(out)) + 10
            x = base.sample(m, rng)
            dist = np.maximum(np.linalg.norm(x - self.center, axis=1) - self.radius, 0.0)
            acc = rng.uniform(size=m) < np.exp(-self.rate * dist)
            out = np.vstack([out, x[acc]])
        return out[:n]

    def mass_in_ball(self):
        if self.dim == 1:
            return 2 * self.radius / np.exp(self._logZ)
        return pi * self.radius ** 2 / np.exp(self._logZ)

    def moments(self):
        s = self.rate
        Z = np.exp(self._logZ)
        if self.dim == 1:
            m1 = self._radial(s, 1) / Z
            m2 = self._radial(s, 2) / Z
            return self.center + m1, np.array([[m2 - m1 ** 2]])
        e = lambda i: (lambda p, th: p * (np.cos(th) if i == 0 else np.sin(th)))
        m1 = np.array([self._polar(s, e(i)) for i in range(2)]) / Z
        c = lambda fn: self._polar(s, fn) / Z
        Sxx = c(lambda p, th: (p * np.cos(th)) ** 2)
        Syy = c(lambda p, th: (p * np.sin(th)) ** 2)
        Sxy = c(lambda p, th: p * p * np.cos(th) * np.sin(th))
        cov = np.array([[Sxx, Sxy], [Sxy, Syy]]) - np.outer(m1, m1)
        return self.center + m1, cov

    def params(self):
        return {"vertices": self.P.vertices.tolist(), "theta": self.theta,
                "center": self.center.tolist(), "radius": self.radius}


def theta_floor_for_mass(P, mass, center=None, radius=None):
    """Member of the theta-floor family that puts ``mass`` on the ball B."""
    f0 = ThetaFloorDensity(P, center=center, radius=radius, rate=0.0)
    if mass <= f0.mass_in_ball():
        return f0
    lo, hi = 0.0, 1.0
    while ThetaFloorDensity(P, center=center, radius=radius, rate=hi).mass_in_ball() < mass:
        hi *= 2
    g = lambda s: ThetaFloorDensity(P, center=center, radius=radius, rate=s).mass_in_ball() - mass
    s = optimize.brentq(g, lo, hi, xtol=1e-10)
    return ThetaFloorDensity(P, center=center, radius=radius, rate=s)


# ----------------------------------------------------------------------
# JSON

def density_from_json(obj):
    """Build a density from ``{"family", "params"}`` or ``{"pieces": [...]}``."""
    if "pieces" in obj:
        return LogKAffineDensity.from_json(obj)
    fam = obj["family"]
    p = obj.get("params", {})
    if fam == "gaussian":
        return GaussianDensity(p.get("mean"), p.get("cov"), d=p.get("d"))
    if fam == "laplace":
        return LaplaceDensity(p.get("d", 1))
    if fam == "bump":
        return BumpDensity(p.get("d", 1))
    if fam == "uniform_ball":
        return UniformBall(p.get("d", 1), p.get("center"), p.get("radius", 1.0))
    if fam == "uniform_polytope":
        if "polygon" in p:
            k = int(p["polygon"])
            return UniformPolytope(convex_hull(regular_polygon(k)))
        return UniformPolytope(convex_hull(p["vertices"]))
    if fam == "theta_floor":
        return ThetaFloorDensity(convex_hull(p["vertices"]), theta=p.get("theta"),
                                 center=p.get("center"), radius=p.get("radius"))
    if fam == "fkm":
        return make_fkm(p["k"], p["m"], p["d"])
    raise ValueError(f"unknown family {fam!r}")


def density_to_json(f):
    if isinstance(f, UniformPolytope):
        return {"family": "uniform_polytope", "params": f.params()}
    if isinstance(f, LogKAffineDensity):
        return f.to_json()
    return {"family": f.name, "params": f.params()}
