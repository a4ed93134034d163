"""Convex invelopes of the cube and simplex and their polytopal approximations.

For Q = [0, 1]^d and M(x) = (min(x_j, 1 - x_j))_j, the invelope is

    J_eta = {x in Q : prod_j M(x)_j >= eta},

a convex, reflection-invariant set whose complement has an explicit
volume. P_eta is a polytope inside J_eta whose vertex count grows like
log^{d-1}(1/eta). It is built recursively. Let E_1 = [1, inf). Let h_eta be
the piecewise-affine interpolant of (eta / z)^{1/(d-1)} at the knots
z_k = 2^{(d-1)k} eta^{1/d}, where it takes the values w_k = 2^{-k} eta^{1/d}.
Then L_{d,eta} = {(x, z) : x / h_eta(z) in E_{d-1}}, with E_d = L_{d,1}. P_eta
is the intersection of the reflected copies of L_{d,eta} cut to Q.

Since h_eta is convex, it is the maximum of its affine pieces l_j. Every
facet a . y >= b of E_{d-1} therefore yields the half-spaces
a . x >= b l_j(z), one per piece. Only pieces and facets that can touch
[0, 1/2]^d are kept. The extra ones are valid supporting half-spaces and
do not change the set.
"""
from dataclasses import dataclass
from itertools import product
from math import factorial, log

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection, cKDTree

from .densities import _rng
from .errors import NotNested, OutOfRange, WrongDimension
from .geometry import Polytope, Simplex, convex_hull, simplex_volumes, triangulate

# coordinate slack for vertices that sit exactly on the curve prod x = eta;
# a point stored near 1 carries absolute error eps in 1 - x
VERTEX_ATOL = 4 * np.finfo(float).eps


# ----------------------------------------------------------------------
# the cube invelope

@dataclass
class Invelope:
    """J_eta in [0, 1]^d."""

    eta: float
    dim: int

    def __post_init__(self):
        if not 0 < self.eta <= 2.0 ** -self.dim:
            raise OutOfRange(f"eta must lie in (0, 2^-{self.dim}]")

    def contains(self, x, atol=0.0):
        return invelope_contains(self, x, atol)

    def complement_volume(self):
        return complement_volume(self)


def fold(x):
    """M(x): the reflection of x into [0, 1/2]^d."""
    x = np.asarray(x, dtype=float)
    return np.minimum(x, 1.0 - x)


def invelope_contains(J, x, atol=0.0):
    """prod_j (min(x_j, 1 - x_j) + atol) >= eta, row-wise for arrays."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    inside = np.all((x >= -atol) & (x <= 1 + atol), axis=1)
    val = np.prod(fold(x) + atol, axis=1)
    out = inside & (val >= J.eta)
    return bool(out[0]) if single else out


def complement_volume(J):
    """mu(Q minus J_eta) = 2^d eta sum_{l < d} log^l(2^-d / eta) / l!."""
    d, eta = J.dim, J.eta
    if eta > 2.0 ** -d:
        raise OutOfRange("closed form needs eta <= 2^-d")
    L = log(2.0 ** -d / eta)
    return 2.0 ** d * eta * sum(L ** l / factorial(l) for l in range(d))


def mc_complement_volume(J, n=10 ** 6, seed=0):
    """Monte Carlo estimate and standard error of mu(Q minus J_eta)."""
    X = _rng(seed).uniform(size=(n, J.dim))
    miss = ~invelope_contains(J, X)
    p = miss.mean()
    return float(p), float(np.sqrt(p * (1 - p) / n))


# ----------------------------------------------------------------------
# the recursive polytope

def _knots(d, eta, box):
    """Indices j of the affine pieces of h_eta that can meet [0, box]^d."""
    c = eta ** (1.0 / d)
    lo = int(np.floor(np.log2(c / box))) - 1
    hi = int(np.ceil(1 + np.log2(box / c) / (d - 1))) + 1
    js = [j for j in range(lo, hi + 1)
          if 2.0 ** -j * c <= box * (1 + 1e-12) and 2.0 ** ((d - 1) * (j - 1)) * c <= box * (1 + 1e-12)]
    return js, c


def _h(d, eta, z):
    """h_eta(z), the piecewise-affine interpolant."""
    c = eta ** (1.0 / d)
    k = int(np.floor(np.log2(z / c) / (d - 1)))
    z0, z1 = 2.0 ** ((d - 1) * k) * c, 2.0 ** ((d - 1) * (k + 1)) * c
    w0, w1 = 2.0 ** -k * c, 2.0 ** -(k + 1) * c
    return w0 + (w1 - w0) * (z - z0) / (z1 - z0)


def lifted_halfspaces(d, eta, box=0.5):
    """Half-spaces a . x >= b (rows of A, entries of b) defining L_{d,eta} near [0, box]^d."""
    if d == 1:
        return np.array([[1.0]]), np.array([eta])
    js, c = _knots(d, eta, box)
    Ae, be = lifted_halfspaces(d - 1, 1.0, box / _h(d, eta, box))
    rows, rhs = [], []
    for j in js:
        z0, z1 = 2.0 ** ((d - 1) * (j - 1)) * c, 2.0 ** ((d - 1) * j) * c
        w0, w1 = 2.0 ** -(j - 1) * c, 2.0 ** -j * c
        slope = (w1 - w0) / (z1 - z0)
        # a . x >= b (w0 + slope (z - z0))
        for a, b in zip(Ae, be):
            rows.append(np.append(a, -b * slope))
            rhs.append(b * (w0 - slope * z0))
    A, b = np.array(rows), np.array(rhs)
    nrm = np.linalg.norm(A, axis=1)
    return A / nrm[:, None], b / nrm


def reflections(d):
    """The 2^d maps g_xi as (xi, sign) pairs: g(x) = xi + sign * x."""
    out = []
    for xi in product((0, 1), repeat=d):
        xi = np.array(xi, dtype=float)
        out.append((xi, 1.0 - 2.0 * xi))
    return out


@dataclass
class InvelopePolytope:
    """P_eta with its vertex count; ``polytope`` is None only for the single point."""

    eta: float
    dim: int
    polytope: object
    vertices: np.ndarray

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def volume(self):
        return 0.0 if self.polytope is None else self.polytope.volume

    def contains(self, x, tol=1e-9):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.polytope is None:
            return np.all(np.abs(x - self.vertices[0]) <= tol, axis=1)
        return self.polytope.contains(x, tol)

    def sample(self, n, seed=0):
        """Hull-mixture points: random convex combinations of the vertices."""
        rng = _rng(seed)
        W = rng.dirichlet(np.full(len(self.vertices), 0.3), size=n)
        return W @ self.vertices

    def to_json(self):
        return {"eta": self.eta, "d": self.dim, "vertex_count": self.vertex_count,
                "vertices": self.vertices.tolist(), "volume": self.volume}


def build_P(eta, d):
    """The reflection-invariant polytope P_eta inside J_eta, d in {2, 3}."""
    if d not in (2, 3):
        raise WrongDimension("P_eta is built for d in {2, 3}")
    if not 0 < eta <= 2.0 ** -d:
        raise OutOfRange(f"eta must lie in (0, 2^-{d}]")
    if eta >= 2.0 ** -d * (1 - 1e-12):
        centre = np.full((1, d), 0.5)
        return InvelopePolytope(eta, d, None, centre)
    A, b = lifted_halfspaces(d, eta)
    rows, rhs = [], []
    for xi, s in reflections(d):
        # g(x) in {a . x >= b}  <=>  (a * s) . x >= b - a . xi
        rows.append(-(A * s))
        rhs.append(-(b - A @ xi))
    rows.append(np.vstack([np.eye(d), -np.eye(d)]))
    rhs.append(np.concatenate([np.ones(d), np.zeros(d)]))
    A, b = np.vstack(rows), np.concatenate(rhs)
    # bounded by the cube and containing its centre strictly
    hs = HalfspaceIntersection(np.column_stack([A, -b]), np.full(d, 0.5))
    V = _symmetrize(_snap(_unique(hs.intersections), eta, d))
    P = convex_hull(V)
    return InvelopePolytope(eta, d, P, V)


def _unique(V, tol=1e-10):
    """One representative per cluster of points closer than ``tol``."""
    rep = np.arange(len(V))
    for i, j in sorted(cKDTree(V).query_pairs(tol)):
        rep[j] = rep[i] if rep[i] < rep[j] else rep[j]
    return V[np.unique(rep)]


def _snap(V, eta, d, rtol=1e-9):
    """Snap coordinates to the lattice c 2^m (c = eta^{1/d}) and to 1/2.

    Vertices of L_{d,eta} have folded coordinates c 2^m for integer m;
    Qhull returns them with absolute error near machine epsilon, which is
    large relative to the tiny coordinates near the cube's boundary.
    """
    c = eta ** (1.0 / d)
    F = np.minimum(V, 1.0 - V)
    with np.errstate(divide="ignore"):
        L = c * 2.0 ** np.round(np.log2(np.maximum(F, 1e-300) / c))
    near = np.abs(F - L) <= rtol * L
    F = np.where(near, L, F)
    F = np.where(np.abs(F - 0.5) <= rtol, 0.5, F)
    return np.where(V <= 0.5, F, 1.0 - F)


def _symmetrize(V):
    """Average each vertex with the reflections of its images (removes Qhull jitter)."""
    F = np.minimum(V, 1.0 - V)
    key = np.round(F, 9)
    out = V.copy()
    for k in np.unique(key, axis=0):
        idx = np.all(key == k, axis=1)
        f = F[idx].mean(axis=0)
        out[idx] = np.where(V[idx] <= 0.5, f, 1.0 - f)
    return out


def reflection_defect(P):
    """Largest distance from a reflected vertex to the nearest vertex."""
    V = P.vertices
    worst = 0.0
    for xi, s in reflections(P.dim):
        W = xi + s * V
        D = np.min(np.linalg.norm(W[:, None, :] - V[None, :, :], axis=2), axis=1)
        worst = max(worst, float(D.max()))
    return worst


def vertex_growth_fit(counts, etas, d):
    """Least-squares fit of counts against log^{d-1}(1/eta): (slope, intercept, R^2)."""
    x = np.log(1.0 / np.asarray(etas, dtype=float)) ** (d - 1)
    y = np.asarray(counts, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    r2 = 1.0 - np.sum(res ** 2) / np.sum((y - y.mean()) ** 2)
    return float(slope), float(intercept), float(r2)


# ----------------------------------------------------------------------
# triangulating the shell between two nested polytopes

def _boundary_simplices(V):
    """Boundary (d-1)-simplices of conv V as index arrays, Qhull triangulated."""
    return ConvexHull(V).simplices


def _cone_halfspaces(c, T):
    """{x : x in cone from c over the (d-1)-simplex T} as rows A x <= b."""
    d = len(c)
    rows, rhs = [], []
    for i in range(d):
        others = np.delete(T, i, axis=0)
        # normal to span(others - c)
        M = others - c
        if d == 2:
            n = np.array([-M[0, 1], M[0, 0]])
        else:
            n = np.cross(M[0], M[1])
        if n @ (T[i] - c) < 0:
            n = -n
        rows.append(-n)
        rhs.append(-n @ c)
    return np.array(rows), np.array(rhs)


def _outward_plane(V, T, c):
    """Supporting plane a . x <= b of the face T, oriented away from c."""
    d = V.shape[1]
    M = T[1:] - T[0]
    n = np.array([-M[0, 1], M[0, 0]]) if d == 2 else np.cross(M[0], M[1])
    if n @ (c - T[0]) > 0:
        n = -n
    return n, n @ T[0]


def _directions(c, T):
    U = T - c
    U /= np.linalg.norm(U, axis=1)[:, None]
    m = U.mean(axis=0)
    m /= np.linalg.norm(m)
    return m, float(np.max(np.arccos(np.clip(U @ m, -1, 1))))


def shell_triangulation(P_eta, P_eta_tilde):
    """Simplices with disjoint interiors covering P_eta minus the interior of P_eta_tilde.

    The shell is cut along the radial fans of both boundaries from a point c
    inside the inner polytope; each overlap of an outer and an inner fan
    cone is a convex polytope, which is then triangulated. When the inner
    polytope is a single point this is the fan triangulation of P_eta.

    Raises
    ------
    NotNested
        If P_eta_tilde is not contained in P_eta.
    """
    outer, inner = P_eta, P_eta_tilde
    if not np.all(outer.contains(inner.vertices, tol=1e-9)):
        raise NotNested("inner polytope is not contained in the outer one")
    V = outer.vertices
    c = inner.vertices.mean(axis=0)
    out_faces = [V[s] for s in _boundary_simplices(V)]
    if inner.polytope is None or len(inner.vertices) <= inner.dim:
        return [Simplex(np.vstack([c, T])) for T in out_faces]
    W = inner.vertices
    in_faces = [W[s] for s in _boundary_simplices(W)]
    in_dirs = [_directions(c, T) for T in in_faces]
    in_planes = [_outward_plane(W, T, c) for T in in_faces]
    in_cones = [_cone_halfspaces(c, T) for T in in_faces]
    out = []
    for T in out_faces:
        m, r = _directions(c, T)
        Ac, bc = _cone_halfspaces(c, T)
        a, b0 = _outward_plane(V, T, c)
        for (m2, r2), (a2, b2), (A2, B2) in zip(in_dirs, in_planes, in_cones):
            if np.arccos(np.clip(m @ m2, -1, 1)) > r + r2 + 1e-9:
                continue
            A = np.vstack([Ac, A2, a, -a2])
            bb = np.concatenate([bc, B2, [b0, -b2]])
            try:
                piece = Polytope.from_halfspaces(A, bb)
            except Exception:
                continue
            out.extend(triangulate(piece))
    return out


def shell_volume(simplices):
    if not simplices:
        return 0.0
    return float(np.sum(simplex_volumes(np.array([s.vertices for s in simplices]))))


# ----------------------------------------------------------------------
# the simplex invelope

@dataclass
class SimplexInvelope:
    """J^triangle_eta in the standard simplex of R^{d+1}.

    Points are given in barycentric coordinates (length d + 1, summing to 1).
    R_j is the part of the simplex where coordinate j is largest, and Pi
    drops the last coordinate.
    """

    eta: float
    dim: int

    def __post_init__(self):
        if not 0 < self.eta <= (self.dim + 1.0) ** -self.dim:
            raise OutOfRange("eta must lie in (0, (d+1)^-d]")

    def contains(self, x, rtol=1e-12):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ok = np.all(x >= 0, axis=1) & (np.abs(x.sum(axis=1) - 1) <= 1e-9)
        drop = np.stack([np.prod(np.delete(x, j, axis=1), axis=1) for j in range(x.shape[1])], axis=1)
        return ok & np.all(drop >= self.eta * (1 - rtol), axis=1)

    def in_region(self, x, j):
        """x in R_j (coordinate j is a largest one)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all(x[:, [j]] >= x, axis=1)

    @staticmethod
    def project(x):
        return np.atleast_2d(x)[:, :-1]

    @staticmethod
    def lift(y):
        y = np.atleast_2d(y)
        return np.column_stack([y, 1.0 - y.sum(axis=1)])

    @property
    def simplex_volume(self):
        """d-dimensional volume of the standard simplex in R^{d+1}."""
        return np.sqrt(self.dim + 1.0) / factorial(self.dim)


def simplex_invelope(eta, d):
    if d not in (2, 3):
        raise WrongDimension("simplex invelopes are provided for d in {2, 3}")
    return SimplexInvelope(eta, d)


def projected_volume_check(S, n=10 ** 6, seed=0):
    """Two Monte Carlo volumes: of R_{d+1} cap J (in the simplex) and of its projection.

    The first samples the simplex uniformly; the second samples the box
    [0, 1/2]^d (which contains Q^triangle) and tests lifted points. Returns
    (vol_simplex_set, vol_projection); their ratio should be sqrt(d + 1).
    """
    rng = _rng(seed)
    d = S.dim
    X = rng.dirichlet(np.ones(d + 1), size=n)
    hit = S.in_region(X, d) & S.contains(X)
    v1 = hit.mean() * S.simplex_volume
    Y = rng.uniform(0.0, 0.5, size=(n, d))
    Z = S.lift(Y)
    hit2 = np.all(Z >= 0, axis=1) & S.in_region(Z, d) & S.contains(Z)
    v2 = hit2.mean() * 0.5 ** d
    return float(v1), float(v2)
