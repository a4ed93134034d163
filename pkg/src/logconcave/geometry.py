"""Convex polyhedra, hulls, triangulations and subdivisions in d <= 3.

Polyhedra are stored in both representations. The H-representation is a
list of unit-normal half-spaces ``a . x <= b``; the V-representation is a
vertex array plus an array of extreme recession rays (empty when bounded).
Hull and half-space computations go through Qhull (``scipy.spatial``).
"""
from dataclasses import dataclass
from itertools import combinations
from math import factorial

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import DegenerateInput, DegenerateSimplex, WrongDimension

# relative tolerance on orientation tests / plane offsets
REL_TOL = 1e-10


@dataclass(frozen=True)
class HalfSpace:
    """The closed half-space {x : normal . x <= offset}."""

    normal: np.ndarray
    offset: float

    def contains(self, x, tol=1e-9):
        return np.asarray(x) @ self.normal <= self.offset + tol


class Simplex:
    """A d-simplex given by its d+1 vertices (rows)."""

    def __init__(self, vertices, check=True):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if v.shape[0] != v.shape[1] + 1:
            raise DegenerateSimplex(f"need d+1 vertices in R^d, got shape {v.shape}")
        self.vertices = v
        self.dim = v.shape[1]
        self.volume = simplex_volumes(v[None])[0]
        if check:
            scale = max(np.ptp(v, axis=0).max(), 1e-300)
            if self.volume <= REL_TOL * scale ** self.dim:
                raise DegenerateSimplex("simplex volume is numerically zero")

    def barycentric(self, x):
        """Barycentric coordinates of the rows of ``x``."""
        x = np.atleast_2d(x)
        T = (self.vertices[1:] - self.vertices[0]).T
        lam = np.linalg.solve(T, (x - self.vertices[0]).T).T
        return np.column_stack([1.0 - lam.sum(axis=1), lam])

    def contains(self, x, tol=1e-12, open_=False):
        lam = self.barycentric(x)
        if open_:
            return np.all(lam > tol, axis=1)
        return np.all(lam >= -tol, axis=1)

    def __repr__(self):
        return f"Simplex({self.vertices.tolist()})"


def simplex_volumes(V):
    """Volumes of a batch of simplices, ``V`` of shape (N, d+1, d)."""
    V = np.asarray(V, dtype=float)
    d = V.shape[-1]
    E = V[:, 1:, :] - V[:, :1, :]
    return np.abs(np.linalg.det(E)) / factorial(d)


def affine_rank(P, tol=REL_TOL):
    """Affine dimension of a point cloud (rows of ``P``)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] <= 1:
        return 0
    Q = P - P.mean(axis=0)
    s = np.linalg.svd(Q, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0] * max(1, P.shape[0]) ** 0.5))


def _rank(M, tol=1e-9):
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _unique_rows(X, tol):
    """Deduplicate rows within ``tol`` (sup norm), keeping first occurrences."""
    if len(X) == 0:
        return X
    order = np.lexsort(X.T[::-1])
    keep = []
    for i in order:
        if not any(np.max(np.abs(X[i] - X[j])) <= tol for j in keep):
            keep.append(i)
    keep.sort()
    return X[keep]


def _chebyshev_center(A, b):
    """Center and radius of the largest ball inside {A x <= b} (LP)."""
    d = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.column_stack([A, norms])
    bounds = [(None, None)] * d + [(0, 1e6)]
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:d], res.x[-1]


class Polytope:
    """Closed convex polyhedron with vertex/ray and half-space descriptions.

    Despite the name the set may be unbounded (``rays`` non-empty), which is
    needed for supports of log-affine densities. Use the ``from_*``
    constructors rather than ``__init__``.

    Attributes
    ----------
    A, b : ndarray
        Irredundant facet description ``A x <= b`` with unit-norm rows.
    vertices : ndarray, shape (v, d)
    rays : ndarray, shape (r, d)
        Extreme rays of the recession cone, unit length.
    """

    def __init__(self, A, b, vertices, rays):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.vertices = np.asarray(vertices, dtype=float)
        self.rays = np.asarray(rays, dtype=float).reshape(-1, self.A.shape[1])
        self.dim = self.A.shape[1]

    # ------------------------------------------------------------------
    # constructors
    @classmethod
    def from_points(cls, points):
        """Convex hull of a finite point set (see :func:`convex_hull`)."""
        return convex_hull(points)

    @classmethod
    def from_halfspaces(cls, A, b):
        """Polyhedron {x : A x <= b}; must be full-dimensional and line-free."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        nrm = np.linalg.norm(A, axis=1)
        if np.any(nrm == 0):
            raise DegenerateInput("zero normal in half-space list")
        A, b = A / nrm[:, None], b / nrm
        d = A.shape[1]
        if d == 1:
            return _interval_from_halfspaces(A, b)
        if _rank(A) < d:
            raise DegenerateInput("polyhedron contains a line")
        center, radius = _chebyshev_center(A, b)
        scale = 1.0 + np.max(np.abs(b))
        if center is None or radius <= 1e-9 * scale:
            raise DegenerateInput("polyhedron is empty or not full-dimensional")
        rays = _extreme_rays(A)
        if len(rays):
            big = 1e3 * (scale + np.max(np.abs(center)))
            Ab = np.vstack([A, np.eye(d), -np.eye(d)])
            bb = np.concatenate([b, center + big, -(center - big)])
        else:
            Ab, bb = A, b
        hs = HalfspaceIntersection(np.column_stack([Ab, -bb]), center)
        V = hs.intersections
        V = V[np.all(np.isfinite(V), axis=1)]
        if len(rays):
            on_box = np.any(np.abs(Ab[len(A):] @ V.T - bb[len(A):, None]) < 1e-6 * big, axis=0)
            V = V[~on_box]
        V = _unique_rows(V, 1e-9 * scale)
        return _finalize(A, b, V, rays)

    @classmethod
    def from_vertices_rays(cls, vertices, rays=()):
        """conv(vertices) + cone(rays)."""
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        d = V.shape[1]
        R = np.asarray(rays, dtype=float).reshape(-1, d)
        if len(R) == 0:
            return convex_hull(V)
        R = R / np.linalg.norm(R, axis=1)[:, None]
        if d == 1:
            lo = -np.inf if np.any(R[:, 0] < 0) else V.min()
            hi = np.inf if np.any(R[:, 0] > 0) else V.max()
            if np.isinf(lo) and np.isinf(hi):
                raise DegenerateInput("polyhedron contains a line")
            return _interval(lo, hi)
        # homogenize: P = {x : (x, 1) in cone{(v, 1), (r, 0)}}
        s = 1.0 + np.max(np.abs(V))
        G = np.vstack([np.zeros(d + 1), np.column_stack([V / s, np.ones(len(V))]),
                       np.column_stack([R, np.zeros(len(R))])])
        try:
            hull = ConvexHull(G)
        except Exception as exc:  # Qhull raises QhullError on flat input
            raise DegenerateInput(str(exc)) from exc
        eq = hull.equations
        through0 = np.abs(eq[:, -1]) < 1e-10
        if through0.sum() == 0:
            raise DegenerateInput("no facets through the apex")
        N = eq[through0, :-1]
        A = N[:, :d]
        b = -N[:, d] * s
        nrm = np.linalg.norm(A, axis=1)
        ok = nrm > 1e-12
        return cls.from_halfspaces(A[ok], b[ok])

    # ------------------------------------------------------------------
    @property
    def is_bounded(self):
        return len(self.rays) == 0

    @property
    def facet_count(self):
        return len(self.b)

    @property
    def halfspaces(self):
        return [HalfSpace(a.copy(), float(c)) for a, c in zip(self.A, self.b)]

    @property
    def facets(self):
        return self.halfspaces

    def scale(self):
        """Characteristic length used for relative tolerances."""
        if len(self.vertices) == 0:
            return 1.0
        return 1.0 + float(np.max(np.abs(self.vertices)))

    def contains(self, x, tol=1e-9):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all(x @ self.A.T <= self.b + tol * self.scale(), axis=1)

    def interior_contains(self, x, tol=1e-9):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all(x @ self.A.T < self.b - tol * self.scale(), axis=1)

    @property
    def volume(self):
        if not self.is_bounded:
            return np.inf
        if self.dim == 1:
            return float(self.vertices.max() - self.vertices.min())
        return float(ConvexHull(self.vertices).volume)

    @property
    def centroid_of_vertices(self):
        return self.vertices.mean(axis=0)

    def interior_point(self):
        c, _ = _chebyshev_center(self.A, self.b)
        return c

    def intersect(self, other):
        """Intersection as a Polytope, or None if it has empty interior."""
        A = np.vstack([self.A, other.A])
        b = np.concatenate([self.b, other.b])
        try:
            return Polytope.from_halfspaces(A, b)
        except DegenerateInput:
            return None

    def with_halfspace(self, a, c):
        """Intersection with {a . x <= c}, or None if lower dimensional."""
        A = np.vstack([self.A, np.atleast_2d(a)])
        b = np.append(self.b, c)
        try:
            return Polytope.from_halfspaces(A, b)
        except DegenerateInput:
            return None

    def affine_image(self, M, t):
        """Image under x -> M x + t (M invertible)."""
        M = np.atleast_2d(M)
        V = self.vertices @ M.T + t
        R = self.rays @ M.T
        if self.is_bounded:
            return convex_hull(V)
        return Polytope.from_vertices_rays(V, R)

    def to_json(self):
        return {"vertices": self.vertices.tolist(), "rays": self.rays.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls.from_vertices_rays(obj["vertices"], obj.get("rays", []))

    def __repr__(self):
        kind = "bounded" if self.is_bounded else f"{len(self.rays)} rays"
        return f"Polytope(d={self.dim}, v={len(self.vertices)}, facets={self.facet_count}, {kind})"


# ----------------------------------------------------------------------
# helpers for construction

def _interval(lo, hi):
    A, b, V, R = [], [], [], []
    if np.isfinite(hi):
        A.append([1.0]); b.append(hi); V.append([hi])
    else:
        R.append([1.0])
    if np.isfinite(lo):
        A.append([-1.0]); b.append(-lo); V.append([lo])
    else:
        R.append([-1.0])
    if np.isfinite(lo) and np.isfinite(hi) and hi - lo <= REL_TOL * (1 + abs(lo) + abs(hi)):
        raise DegenerateInput("interval has empty interior")
    if not V:
        raise DegenerateInput("polyhedron contains a line")
    return Polytope(np.array(A), np.array(b), np.array(sorted(V)), np.array(R).reshape(-1, 1))


def _interval_from_halfspaces(A, b):
    a = A[:, 0]
    hi = np.min(b[a > 0]) if np.any(a > 0) else np.inf
    lo = np.max(-b[a < 0]) if np.any(a < 0) else -np.inf
    if not lo < hi:
        raise DegenerateInput("empty interval")
    return _interval(lo, hi)


def _extreme_rays(A, tol=1e-10):
    """Extreme rays of the pointed cone {u : A u <= 0} (d = 2 or 3)."""
    d = A.shape[1]
    cands = []
    if d == 2:
        for a in A:
            cands.append([-a[1], a[0]])
    elif d == 3:
        for i, j in combinations(range(len(A)), 2):
            u = np.cross(A[i], A[j])
            if np.linalg.norm(u) > 1e-12:
                cands.append(u)
    else:
        raise WrongDimension("ray enumeration implemented for d in {2, 3}")
    if not cands:
        return np.zeros((0, d))
    C = np.array(cands, dtype=float)
    C /= np.linalg.norm(C, axis=1)[:, None]
    C = np.vstack([C, -C])
    rays = []
    for u in C:
        s = A @ u
        if np.all(s <= tol):
            tight = A[np.abs(s) <= tol]
            if _rank(tight) == d - 1:
                rays.append(u)
    if not rays:
        return np.zeros((0, d))
    return _unique_rows(np.array(rays), 1e-8)


def _finalize(A, b, V, rays):
    """Drop redundant half-spaces and non-extreme points."""
    d = A.shape[1]
    scale = 1.0 + (np.max(np.abs(V)) if len(V) else 0.0)
    tolv = 1e-8 * scale
    keep_rows = []
    for i in range(len(A)):
        tv = V[np.abs(V @ A[i] - b[i]) <= tolv]
        tr = rays[np.abs(rays @ A[i]) <= 1e-8] if len(rays) else np.zeros((0, d))
        if len(tv) == 0:
            continue
        M = np.vstack([tv[1:] - tv[0], tr]) if len(tv) > 1 or len(tr) else np.zeros((0, d))
        if _rank(M, 1e-8) == d - 1:
            dup = any(np.allclose(A[i], A[j], atol=1e-9) and abs(b[i] - b[j]) <= tolv
                      for j in keep_rows)
            if not dup:
                keep_rows.append(i)
    A2, b2 = A[keep_rows], b[keep_rows]
    # a point is a vertex iff its tight facet normals span R^d
    keep_v = [k for k, v in enumerate(V)
              if _rank(A2[np.abs(A2 @ v - b2) <= tolv]) == d]
    V2 = V[keep_v]
    if len(V2):
        V2 = V2[np.lexsort(V2.T[::-1])]
    return Polytope(A2, b2, V2, rays)


class HPolyhedron:
    """Half-space description {A x <= b} that may contain lines (or be R^d)."""

    def __init__(self, A, b, dim):
        self.A = np.asarray(A, dtype=float).reshape(-1, dim)
        self.b = np.asarray(b, dtype=float).ravel()
        self.dim = dim

    @property
    def facet_count(self):
        return len(self.b)

    def contains(self, x, tol=1e-9):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if len(self.b) == 0:
            return np.ones(len(x), bool)
        s = 1.0 + np.max(np.abs(self.b))
        return np.all(x @ self.A.T <= self.b + tol * s, axis=1)


def hull_halfspaces(vertices, rays=()):
    """Irredundant H-representation of conv(vertices) + cone(rays).

    The recession cone may contain lines; the result can have no rows
    (the whole space).
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    d = V.shape[1]
    R = np.asarray(rays, dtype=float).reshape(-1, d)
    if len(R) == 0:
        p = convex_hull(V)
        return HPolyhedron(p.A, p.b, d)
    R = R / np.linalg.norm(R, axis=1)[:, None]
    if d == 1:
        A, b = [], []
        if not np.any(R[:, 0] > 0):
            A.append([1.0]); b.append(V.max())
        if not np.any(R[:, 0] < 0):
            A.append([-1.0]); b.append(-V.min())
        return HPolyhedron(A, b, 1)
    s = 1.0 + np.max(np.abs(V))
    G = np.vstack([np.zeros(d + 1), np.column_stack([V / s, np.ones(len(V))]),
                   np.column_stack([R, np.zeros(len(R))])])
    hull = ConvexHull(G)
    eq = hull.equations
    N = eq[np.abs(eq[:, -1]) < 1e-10, :-1]
    A, b = N[:, :d], -N[:, d] * s
    nrm = np.linalg.norm(A, axis=1)
    ok = nrm > 1e-9
    A, b = A[ok] / nrm[ok, None], b[ok] / nrm[ok]
    rows = []
    for i in range(len(A)):
        if not any(np.allclose(A[i], A[j], atol=1e-9) and abs(b[i] - b[j]) <= 1e-9 * s for j in rows):
            rows.append(i)
    return HPolyhedron(A[rows], b[rows], d)


def convex_hull(points):
    """Convex hull of a finite point set.

    Parameters
    ----------
    points : array_like, shape (n, d)

    Returns
    -------
    Polytope
        Bounded polytope whose vertices are the extreme input points.

    Raises
    ------
    DegenerateInput
        If the points span an affine subspace of dimension < d.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = P.shape
    if d == 1:
        return _interval(P.min(), P.max())
    if n < d + 1 or affine_rank(P) < d:
        raise DegenerateInput("points do not span R^d")
    try:
        hull = ConvexHull(P)
    except Exception as exc:
        raise DegenerateInput(str(exc)) from exc
    eq = hull.equations
    A, b = eq[:, :-1], -eq[:, -1]
    V = P[np.sort(hull.vertices)]
    return _finalize(A, b, V, np.zeros((0, d)))


# ----------------------------------------------------------------------
# triangulation

def _order_polygon(V, normal=None):
    """Indices ordering coplanar points cyclically around their centroid."""
    c = V.mean(axis=0)
    W = V - c
    if V.shape[1] == 2:
        ang = np.arctan2(W[:, 1], W[:, 0])
    else:
        e1 = W[np.argmax(np.linalg.norm(W, axis=1))]
        e1 = e1 / np.linalg.norm(e1)
        e2 = np.cross(normal, e1)
        ang = np.arctan2(W @ e2, W @ e1)
    return np.argsort(ang)


def facet_vertex_sets(p):
    """For each facet of ``p`` the indices of the vertices lying on it."""
    tol = 1e-8 * p.scale()
    return [np.flatnonzero(np.abs(p.vertices @ a - c) <= tol) for a, c in zip(p.A, p.b)]


def triangulate(p):
    """Fan triangulation of a bounded full-dimensional polytope.

    The boundary facets are fan-triangulated from their lowest-index vertex,
    and the facets that avoid vertex 0 are then coned to vertex 0.

    Returns
    -------
    list of Simplex
    """
    if not p.is_bounded:
        raise DegenerateInput("cannot triangulate an unbounded polyhedron")
    V = p.vertices
    d = p.dim
    if d == 1:
        return [Simplex([[V.min()], [V.max()]])]
    if d == 2:
        order = _order_polygon(V)
        k = int(np.where(order == 0)[0][0])
        order = np.roll(order, -k)
        return [Simplex(V[[order[0], order[i], order[i + 1]]]) for i in range(1, len(order) - 1)]
    if d == 3:
        out = []
        for a, idx in zip(p.A, facet_vertex_sets(p)):
            if 0 in idx:
                continue
            ring = idx[_order_polygon(V[idx], a)]
            k = int(np.argmin(ring))
            ring = np.roll(ring, -k)
            for i in range(1, len(ring) - 1):
                out.append(Simplex(V[[0, ring[0], ring[i], ring[i + 1]]]))
        return out
    raise WrongDimension("triangulation implemented for d <= 3")


def truncate(p, a, c):
    """Bounded piece ``p ∩ {a . x <= c}`` (None if lower dimensional)."""
    return p.with_halfspace(a, c)


def bounding_box(p, pad=0.0):
    lo = p.vertices.min(axis=0) - pad
    hi = p.vertices.max(axis=0) + pad
    return lo, hi


# ----------------------------------------------------------------------
# subdivisions

class Subdivision:
    """A finite list of full-dimensional polyhedral cells."""

    def __init__(self, cells):
        self.cells = list(cells)
        if not self.cells:
            raise DegenerateInput("empty subdivision")
        self.dim = self.cells[0].dim

    def to_json(self):
        return {"cells": [c.to_json() for c in self.cells]}

    @classmethod
    def from_json(cls, obj):
        return cls([Polytope.from_json(c) for c in obj["cells"]])


def gamma(s):
    """Total facet count over the cells of a subdivision."""
    cells = s.cells if isinstance(s, Subdivision) else list(s)
    return int(sum(c.facet_count for c in cells))


def _truncation_box(cells, extra=None):
    V = np.vstack([c.vertices for c in cells if len(c.vertices)] + ([extra] if extra is not None else []))
    lo, hi = V.min(axis=0), V.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    return lo - span, hi + span


def _box_halfspaces(lo, hi):
    d = len(lo)
    return np.vstack([np.eye(d), -np.eye(d)]), np.concatenate([hi, -lo])


def _clip_to_box(c, lo, hi):
    if c.is_bounded:
        return c
    A, b = _box_halfspaces(lo, hi)
    return Polytope.from_halfspaces(np.vstack([c.A, A]), np.concatenate([c.b, b]))


def _is_face(cell, q, tol):
    """Is the polytope ``q`` (given by its vertices) a face of ``cell``?"""
    Vq = q
    tight = [i for i in range(len(cell.b)) if np.all(np.abs(Vq @ cell.A[i] - cell.b[i]) <= tol)]
    Vc = cell.vertices
    if tight:
        on = np.all(np.abs(Vc @ cell.A[tight].T - cell.b[tight]) <= tol, axis=1)
    else:
        on = np.ones(len(Vc), bool)
    F = Vc[on]
    # the smallest face containing q must not have vertices outside q's hull
    if len(F) == 0:
        return True
    return bool(np.all([np.min(np.max(np.abs(Vq - v), axis=1)) <= tol or
                        _in_hull(v, Vq, tol) for v in F]))


def _in_hull(v, P, tol):
    n = len(P)
    res = linprog(np.zeros(n), A_eq=np.vstack([P.T, np.ones(n)]), b_eq=np.append(v, 1.0),
                  bounds=[(0, None)] * n, method="highs")
    return res.status == 0


def validate_subdivision(cells, support=None, n_probe=20000, seed=0):
    """Check that ``cells`` form a polyhedral subdivision.

    Parameters
    ----------
    cells : list of Polytope or Subdivision
    support : Polytope, optional
        Declared union of the cells. Defaults to the hull of all cells.
    n_probe : int
        Monte Carlo points for the coverage check.

    Returns
    -------
    dict
        ``valid`` flag, list of ``violations`` and bookkeeping. Unbounded
        cells are checked only after truncation to a box around all
        vertices; ``truncated`` records when that happened.
    """
    cells = cells.cells if isinstance(cells, Subdivision) else list(cells)
    violations = []
    truncated = any(not c.is_bounded for c in cells)
    lo, hi = _truncation_box(cells)
    boxed = [_clip_to_box(c, lo, hi) for c in cells]
    scale = 1.0 + float(np.max(np.abs(np.concatenate([lo, hi]))))
    tol = 1e-7 * scale
    for i, j in combinations(range(len(boxed)), 2):
        ci, cj = boxed[i], boxed[j]
        A = np.vstack([ci.A, cj.A])
        b = np.concatenate([ci.b, cj.b])
        _, r = _chebyshev_center(A, b)
        if r > tol:
            violations.append(("interior_intersection", i, j))
            continue
        Vq = _intersection_vertices(A, b, tol)
        if Vq is None or len(Vq) == 0:
            continue
        if not (_is_face(ci, Vq, tol) and _is_face(cj, Vq, tol)):
            violations.append(("not_common_face", i, j))
    # coverage by Monte Carlo inside the truncation box
    rng = np.random.default_rng(seed)
    if support is None:
        allv = np.vstack([c.vertices for c in boxed])
        support_c = convex_hull(allv)
    else:
        support_c = _clip_to_box(support, lo, hi)
    slo, shi = support_c.vertices.min(axis=0), support_c.vertices.max(axis=0)
    X = rng.uniform(slo, shi, size=(n_probe, len(slo)))
    in_sup = support_c.contains(X, tol=1e-12)
    in_any = np.zeros(n_probe, bool)
    for c in boxed:
        in_any |= c.contains(X, tol=1e-12)
    mism = np.mean(in_sup != in_any) / max(np.mean(in_sup), 1e-12)
    if mism > 0.005:
        violations.append(("coverage", float(mism)))
    return {"valid": not violations, "violations": violations,
            "coverage_mismatch": float(mism), "truncated": truncated}


def _intersection_vertices(A, b, tol):
    """Vertices of a possibly lower-dimensional polytope {A x <= b}."""
    d = A.shape[1]
    pts = []
    for idx in combinations(range(len(A)), d):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(idx)])
        if np.all(A @ x <= b + tol):
            pts.append(x)
    if not pts:
        return None
    return _unique_rows(np.array(pts), tol)


# ----------------------------------------------------------------------
# combinatorics

def edge_count(p):
    """Number of edges (1-faces) of a bounded 3-polytope."""
    tol = 1e-8 * p.scale()
    T = np.abs(p.vertices @ p.A.T - p.b) <= tol
    e = 0
    for i, j in combinations(range(len(p.vertices)), 2):
        common = T[i] & T[j]
        if common.sum() >= 2 and _rank(p.A[common]) == 2:
            e += 1
    return e


def euler_check(p):
    """Euler relation and the facet/vertex inequalities for a 3-polytope.

    Returns True iff ``v - e + f = 2``, ``v <= 2(f - 2)`` and
    ``f <= 2(v - 2)``.
    """
    if p.dim != 3:
        raise WrongDimension("euler_check needs d = 3")
    if not p.is_bounded:
        raise DegenerateInput("euler_check needs a bounded polytope")
    v, f = len(p.vertices), p.facet_count
    e = edge_count(p)
    return bool(v - e + f == 2 and v <= 2 * (f - 2) and f <= 2 * (v - 2))


def simplex_cells(simplices):
    """Wrap simplices as bounded Polytope cells."""
    return [convex_hull(s.vertices if isinstance(s, Simplex) else s) for s in simplices]
