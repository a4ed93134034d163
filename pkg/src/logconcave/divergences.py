"""Squared Hellinger distance, Kullback-Leibler divergence and d_X^2.

For two piecewise log-affine densities both f^{1/2} g^{1/2} and
f log(f/g) are exp-affine (times an affine factor) on every cell of the
common refinement of their subdivisions, so both divergences reduce to
exact simplex integrals. When only the first argument is piecewise
log-affine with bounded cells, each of its simplices is integrated by a
collapsed-coordinate Gauss-Legendre rule. Otherwise the fallback is Monte
Carlo with a reported standard error.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .densities import Density, LogKAffineDensity, _rng
from .errors import InvalidSample
from .geometry import simplex_volumes, triangulate
from .integrals import AffineForm, first_moment, integral

MC_SIZE = 10 ** 6
SUPPORT_TOL = 1e-9


@dataclass
class DivergenceReport:
    """Divergences of f_hat from f0.

    ``method`` names the route used for the Hellinger/KL integrals and
    ``error_estimate`` bounds their numerical error (0 when exact).
    """

    hellinger_sq: float
    kl: float
    dx_sq: float = None
    method: str = "exact"
    error_estimate: float = 0.0

    def chain_holds(self, slack=1e-9):
        """d_H^2 <= KL <= d_X^2 up to ``slack``."""
        ok = self.hellinger_sq <= self.kl + slack
        if self.dx_sq is not None:
            ok = ok and self.kl <= self.dx_sq + slack
        return bool(ok)


# ----------------------------------------------------------------------
# quadrature on simplices

def simplex_rule(d, q):
    """Nodes (Q, d) and weights (Q,) on the unit simplex {t >= 0, sum t <= 1}.

    Collapsed coordinates t_1 = u_1, t_2 = (1 - u_1) u_2, ... map the cube
    onto the simplex; the weights include the Jacobian and sum to 1/d!.
    """
    x, w = np.polynomial.legendre.leggauss(q)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    U = np.column_stack([g.ravel() for g in grids])
    W = np.prod(np.column_stack([g.ravel() for g in wgrids]), axis=1)
    T = np.empty_like(U)
    rest = np.ones(len(U))
    for k in range(d):
        T[:, k] = rest * U[:, k]
        W = W * (1.0 - U[:, k]) ** (d - 1 - k)
        rest = rest * (1.0 - U[:, k])
    return T, W


def _simplex_nodes(V, q):
    """Quadrature nodes (N, Q, d) and weights (N, Q) for simplices V (N, d+1, d)."""
    N, d1, d = V.shape
    T, W = simplex_rule(d, q)
    E = V[:, 1:, :] - V[:, :1, :]
    X = V[:, :1, :] + np.einsum("qk,nkd->nqd", T, E)
    vol = simplex_volumes(V)
    return X, factorial(d) * vol[:, None] * W[None, :]


# ----------------------------------------------------------------------
# piece bookkeeping

def _is_log_affine(f):
    return isinstance(f, LogKAffineDensity)


def _simplex_pieces(f):
    """(V, alpha, beta) per simplex for a log-affine density with bounded cells."""
    if hasattr(f, "simplex_pieces"):
        return f.simplex_pieces()
    Vs, al, be = [], [], []
    for a, b, c in zip(f._alpha, f._beta, f.cells):
        for s in triangulate(c):
            Vs.append(s.vertices)
            al.append(a)
            be.append(b)
    return np.array(Vs), np.array(al), np.array(be)


def _bounded(f):
    return all(c.is_bounded for c in f.cells)


def refine(f, g):
    """Common refinement of two piecewise log-affine densities.

    Yields (cell, i, j) for every pair of cells E_i of f and E'_j of g whose
    intersection has non-empty interior. A cell of f whose vertices all lie
    in one cell of g is passed through unchanged.
    """
    gcells = g.cells
    boxes = [(c.vertices.min(axis=0), c.vertices.max(axis=0)) if c.is_bounded else None
             for c in gcells]
    for i, c in enumerate(f.cells):
        if c.is_bounded:
            hit = [j for j, gc in enumerate(gcells) if np.all(gc.contains(c.vertices, tol=SUPPORT_TOL))]
            if hit:
                yield c, i, hit[0]
                continue
            lo, hi = c.vertices.min(axis=0), c.vertices.max(axis=0)
        for j, gc in enumerate(gcells):
            if c.is_bounded and boxes[j] is not None:
                if np.any(boxes[j][0] > hi) or np.any(boxes[j][1] < lo):
                    continue
            cell = c.intersect(gc)
            if cell is not None:
                yield cell, i, j


def support_violation(f, g):
    """True if supp f is not contained in supp g (vertex and ray test)."""
    for c in f.cells:
        pts = c.vertices
        if not c.is_bounded:
            big = 1e3 * c.scale()
            pts = np.vstack([pts] + [c.vertices + big * r for r in c.rays])
        if _is_log_affine(g):
            if not np.all(g.support_contains(pts, tol=SUPPORT_TOL)):
                return True
        elif not np.all(np.isfinite(g.logpdf(pts))):
            return True
    return False


# ----------------------------------------------------------------------
# the three routes

def _exact(f, g):
    bc, kl = 0.0, 0.0
    for cell, i, j in refine(f, g):
        af, bf = f._alpha[i], f._beta[i]
        ag, bg = g._alpha[j], g._beta[j]
        bc += integral(cell, AffineForm(0.5 * (af + ag), 0.5 * (bf + bg)))
        form = AffineForm(af, bf)
        kl += (af - ag) @ first_moment(cell, form) + (bf - bg) * integral(cell, form)
    return bc, kl


def _quadrature(f, g, q):
    V, al, be = _simplex_pieces(f)
    X, W = _simplex_nodes(V, q)
    lf = np.einsum("nqd,nd->nq", X, al) + be[:, None]
    lg = g.logpdf(X.reshape(-1, X.shape[-1])).reshape(lf.shape)
    bc = float(np.sum(W * np.exp(0.5 * (lf + lg))))
    with np.errstate(invalid="ignore"):
        kl = float(np.sum(W * np.exp(lf) * (lf - lg)))
    return bc, kl


def _monte_carlo(f, g, n, seed):
    X = f.sample(n, seed=seed)
    X = X.points if hasattr(X, "points") else X
    lf = f.logpdf(X)
    lg = g.logpdf(X)
    r = np.exp(0.5 * (lg - lf))
    d = lf - lg
    se = max(np.std(r) / np.sqrt(n), np.std(d) / np.sqrt(n))
    return float(np.mean(r)), float(np.mean(d)), float(se)


def _route(f, g, method):
    if method != "auto":
        return method
    if _is_log_affine(f) and _is_log_affine(g):
        return "exact"
    if _is_log_affine(f) and _bounded(f):
        return "quadrature"
    return "monte_carlo"


def _bc_kl(f, g, method="auto", q=16, n_mc=MC_SIZE, seed=0):
    """(Bhattacharyya coefficient, KL, method, error estimate)."""
    method = _route(f, g, method)
    if method == "exact":
        bc, kl = _exact(f, g)
        return bc, kl, method, 0.0
    if method == "quadrature":
        bc, kl = _quadrature(f, g, q)
        bc2, kl2 = _quadrature(f, g, q + 8)
        err = max(abs(bc - bc2), abs(kl - kl2) if np.isfinite(kl) else 0.0)
        return bc2, kl2, method, err
    bc, kl, se = _monte_carlo(f, g, n_mc, seed)
    return bc, kl, "monte_carlo", se


def hellinger_sq(f, g, method="auto", **kw):
    """d_H^2(f, g) = int (f^{1/2} - g^{1/2})^2 = 2 - 2 int (f g)^{1/2}.

    Exact for two piecewise log-affine densities; quadrature when one of
    them is piecewise log-affine with bounded cells; Monte Carlo otherwise.
    """
    if not _is_log_affine(f) and _is_log_affine(g):
        f, g = g, f
    elif _is_log_affine(f) and _is_log_affine(g) and len(g.cells) > len(f.cells):
        f, g = g, f
    bc, _, _, _ = _bc_kl(f, g, method, **kw)
    return float(min(2.0, max(0.0, 2.0 - 2.0 * bc)))


def kl(f, g, method="auto", **kw):
    """KL(f, g) = int f log(f / g); +inf when supp f is not inside supp g."""
    if _is_log_affine(f) and support_violation(f, g):
        return np.inf
    _, val, _, _ = _bc_kl(f, g, method, **kw)
    return float(val) if np.isfinite(val) else np.inf


def dx_sq(f_hat, f0, sample):
    """Empirical divergence (1/n) sum log(f_hat(X_i) / f0(X_i)).

    Points outside the support of f_hat give -inf. The value is not clamped
    and can be negative for an f_hat that is not the MLE.

    Raises
    ------
    InvalidSample
        If f0 vanishes at some sample point.
    """
    X = sample.points if hasattr(sample, "points") else np.asarray(sample, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    l0 = f0.logpdf(X)
    if not np.all(np.isfinite(l0)):
        raise InvalidSample("f0 vanishes at a sample point")
    lh = f_hat.logpdf(X)
    if not np.all(np.isfinite(lh)):
        return -np.inf
    return float(np.mean(lh - l0))


def divergence_report(f_hat, f0, sample=None, method="auto", **kw):
    """All three divergences of f_hat from f0 (d_X^2 only with a sample)."""
    violated = _is_log_affine(f_hat) and support_violation(f_hat, f0)
    f, g = f_hat, f0
    if not _is_log_affine(f) and _is_log_affine(g) and method == "auto":
        bc, _, _, _ = _bc_kl(g, f, method, **kw)
        _, klv, route, err = _bc_kl(f, g, method, **kw)
    else:
        bc, klv, route, err = _bc_kl(f, g, method, **kw)
    h = float(min(2.0, max(0.0, 2.0 - 2.0 * bc)))
    k = np.inf if violated or not np.isfinite(klv) else float(klv)
    d = dx_sq(f_hat, f0, sample) if sample is not None else None
    return DivergenceReport(h, k, d, route, err)
