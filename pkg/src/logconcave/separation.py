"""Contour separation classes F^(beta, Lambda, tau).

A density f with covariance Sigma belongs to the class when every pair
with f(y) < f(x) < tau det^{-1/2} Sigma satisfies

    ||x - y||_Sigma >= {f(x) - f(y)} det^{1/2} Sigma
                       / (Lambda {f(x) det^{1/2} Sigma}^{1 - 1/beta}).

For densities differentiable below the level, this is equivalent to the
gradient bound ||grad f(x)||'_{Sigma^{-1}} <= Lambda {f(x) det^{1/2}
Sigma}^{1 - 1/beta}. Both conditions are certified here by sampling:
a certificate records the worst ratio (left side of the gradient bound
over the right side, or the analogue for pairs) and a witness.

All proposals are built from sample points, the mean and the
Mahalanobis-steepest direction Sigma grad f, so certificates transform
exactly under invertible affine maps.
"""
from dataclasses import dataclass, field
from math import e, factorial, pi

import numpy as np

from .densities import (AffineTransformed, BumpDensity, GaussianDensity, LaplaceDensity,
                        _rng, unit_ball_volume)
from .errors import MissingConstant, OutOfRange

PASS_TOL = 1e-9


@dataclass
class MahalanobisContext:
    """Sigma with its Cholesky factor and det^{1/2}."""

    sigma: np.ndarray
    det_sqrt: float = field(init=False)

    def __post_init__(self):
        self.sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        self._L = np.linalg.cholesky(self.sigma)
        self.det_sqrt = float(np.prod(np.diag(self._L)))
        self._Linv = np.linalg.inv(self._L)

    @classmethod
    def from_density(cls, f):
        return cls(f.moments()[1])

    def norm(self, x):
        """||x||_Sigma = (x^T Sigma^{-1} x)^{1/2}, row-wise."""
        x = np.atleast_2d(x)
        return np.linalg.norm(x @ self._Linv.T, axis=1)

    def scaled_norm(self, w):
        """||w||'_Sigma = (w^T Sigma^{-1} w)^{1/2} det^{-1/2} Sigma."""
        return self.norm(w) / self.det_sqrt

    def dual_scaled_norm(self, w):
        """||w||'_{Sigma^{-1}} = (w^T Sigma w)^{1/2} det^{1/2} Sigma."""
        w = np.atleast_2d(w)
        return np.linalg.norm(w @ self._L, axis=1) * self.det_sqrt


def mahalanobis(x, ctx):
    return ctx.norm(x)


def scaled_norm(w, ctx):
    return ctx.scaled_norm(w)


@dataclass
class SeparationParams:
    """(beta, Lambda, tau); tau = inf is the class F^(beta, Lambda)."""

    beta: float
    lam: float
    tau: float = np.inf

    def __post_init__(self):
        if self.beta < 1:
            raise OutOfRange("beta must be >= 1")
        if not self.lam > 0:
            raise OutOfRange("Lambda must be positive")
        if not self.tau > 0:
            raise OutOfRange("tau must be positive")


@dataclass
class Certificate:
    """Outcome of a sampled certification.

    ``worst_ratio`` is the largest observed ratio of the two sides (the
    condition holds when it is at most 1); ``worst_margin`` is
    1 - worst_ratio.
    """

    passed: bool
    worst_ratio: float
    witness: tuple
    params: SeparationParams
    n_checked: int
    kind: str

    @property
    def worst_margin(self):
        return 1.0 - self.worst_ratio

    def to_json(self):
        w = None if self.witness is None else [np.asarray(p).tolist() for p in self.witness]
        return {"pass": self.passed, "worst_margin": self.worst_margin,
                "witness_pair": w, "kind": self.kind, "n_checked": self.n_checked,
                "params": {"beta": self.params.beta, "lambda": self.params.lam,
                           "tau": None if np.isinf(self.params.tau) else self.params.tau}}


# ----------------------------------------------------------------------
# proposals

def _steepest(f, X, ctx):
    """Sigma grad f(x), normalized to unit Mahalanobis length (0 where flat)."""
    G = f.grad(X)
    U = G @ ctx.sigma
    n = ctx.norm(U)
    ok = n > 0
    U[ok] /= n[ok, None]
    U[~ok] = 0.0
    return U


def _proposal_points(f, mu, n, rng):
    S = f.sample(n, seed=rng)
    S = S.points if hasattr(S, "points") else np.asarray(S)
    return S


def _pairs(f, ctx, mu, budget, rng):
    """Candidate pairs (x, y), each type using about a quarter of the budget."""
    q = max(budget // 4, 8)
    S = _proposal_points(f, mu, q, rng)
    d = S.shape[1]
    t = 10.0 ** rng.uniform(-4, 0.5, size=q)
    # 1. along the steepest direction
    U = _steepest(f, S, ctx)
    X1, Y1 = S, S - t[:, None] * U
    # 2. random chords between sample points
    P = S[rng.permutation(q)]
    X2, Y2 = S, S + t[:, None] * (P - S)
    # 3. radial pairs, including points past the bulk and near the centre
    s = rng.uniform(0.0, 2.5, size=q)
    s2 = s * (1.0 + 10.0 ** rng.uniform(-4, 0, size=q))
    X3, Y3 = mu + s[:, None] * (S - mu), mu + s2[:, None] * (S - mu)
    # 4. steepest pairs at points shrunk towards the centre
    c = 10.0 ** rng.uniform(-3, 0, size=q)
    Z = mu + c[:, None] * (S - mu)
    U4 = _steepest(f, Z, ctx)
    t4 = 10.0 ** rng.uniform(-5, -1, size=q)
    X4, Y4 = Z, Z - t4[:, None] * U4
    X = np.vstack([X1, X2, X3, X4])
    Y = np.vstack([Y1, Y2, Y3, Y4])
    return X.reshape(-1, d), Y.reshape(-1, d)


def _refine_jumps(f, X, Y, lx, ly, steps=60):
    """Move pairs straddling the support boundary onto it by bisection."""
    jump = np.isneginf(ly) & np.isfinite(lx)
    if not np.any(jump):
        return X, Y, lx, ly
    a, b = X[jump].copy(), Y[jump].copy()
    for _ in range(steps):
        m = 0.5 * (a + b)
        inside = np.isfinite(f.logpdf(m))
        a[inside] = m[inside]
        b[~inside] = m[~inside]
    X, Y, lx, ly = X.copy(), Y.copy(), lx.copy(), ly.copy()
    X[jump], Y[jump] = a, b
    lx[jump], ly[jump] = f.logpdf(a), f.logpdf(b)
    return X, Y, lx, ly


def _ctx_and_mean(f):
    mu, cov = f.moments()
    return MahalanobisContext(cov), np.asarray(mu, dtype=float)


def _log_level_term(params, lx, log_det_sqrt):
    """log of Lambda {f(x) det^{1/2} Sigma}^{1 - 1/beta}."""
    return np.log(params.lam) + (1.0 - 1.0 / params.beta) * (lx + log_det_sqrt)


# ----------------------------------------------------------------------
# certificates

def check_separation_pairs(f, params, pair_budget=10 ** 5, seed=0):
    """Sampled certificate of the contour separation condition.

    Ratios are formed in log space so that densities far below the
    smallest normal float still compare correctly.
    """
    ctx, mu = _ctx_and_mean(f)
    rng = _rng(seed)
    X, Y = _pairs(f, ctx, mu, pair_budget, rng)
    lx, ly = f.logpdf(X), f.logpdf(Y)
    swap = ly > lx
    X[swap], Y[swap] = Y[swap].copy(), X[swap].copy()
    lx, ly = np.maximum(lx, ly), np.minimum(lx, ly)
    X, Y, lx, ly = _refine_jumps(f, X, Y, lx, ly)
    log_det = np.log(ctx.det_sqrt)
    ok = np.isfinite(lx) & (ly < lx) & (lx + log_det < np.log(params.tau))
    X, Y, lx, ly = X[ok], Y[ok], lx[ok], ly[ok]
    dist = ctx.norm(X - Y)
    # bisection can collapse a pair onto one float; such pairs carry no information
    keep = dist > 0
    X, Y, lx, ly, dist = X[keep], Y[keep], lx[keep], ly[keep], dist[keep]
    if len(dist) == 0:
        return Certificate(True, 0.0, None, params, 0, "pairs")
    log_diff = lx + np.log1p(-np.exp(ly - lx)) + log_det
    ratio = np.exp(log_diff - _log_level_term(params, lx, log_det) - np.log(dist))
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    return Certificate(bool(worst <= 1.0 + PASS_TOL), worst, (X[k], Y[k]), params, len(ratio), "pairs")


def default_grid(f, n=4000, seed=0):
    """Sample points plus radial rescalings about the mean (affine equivariant)."""
    rng = _rng(seed)
    mu = np.asarray(f.moments()[0], dtype=float)
    S = _proposal_points(f, mu, n, rng)
    s = np.concatenate([10.0 ** np.linspace(-3, 0, 25), np.linspace(1.05, 2.5, 15)])
    R = (mu + s[:, None, None] * (S[None, : max(n // 10, 50)] - mu)).reshape(-1, S.shape[1])
    return np.vstack([S, R])


def check_grad_criterion(f, params, grid=None, gradient=None, seed=0):
    """Certificate of the gradient bound on the points of ``grid``.

    ``gradient`` defaults to ``f.grad`` (analytic where available,
    central differences otherwise).
    """
    ctx, _ = _ctx_and_mean(f)
    X = default_grid(f, seed=seed) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    lx = f.logpdf(X)
    log_det = np.log(ctx.det_sqrt)
    ok = np.isfinite(lx) & (lx + log_det < np.log(params.tau))
    X, lx = X[ok], lx[ok]
    if len(X) == 0:
        return Certificate(True, 0.0, None, params, 0, "gradient")
    G = (gradient or f.grad)(X)
    with np.errstate(divide="ignore"):
        log_lhs = np.log(ctx.dual_scaled_norm(G))
    ratio = np.exp(log_lhs - _log_level_term(params, lx, log_det))
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    return Certificate(bool(worst <= 1.0 + PASS_TOL), worst, (X[k],), params, len(ratio), "gradient")


def gradient_ratio_sup(f, beta, tau=np.inf, grid=None, seed=0):
    """Smallest Lambda the gradient certificate accepts (sup of the ratio)."""
    return check_grad_criterion(f, SeparationParams(beta, 1.0, tau), grid=grid, seed=seed).worst_ratio


def validate_gradient(f, X, h=1e-5, floor=1e-8):
    """Max relative gap between f.grad and central differences where f > floor."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    keep = f.pdf(X) > floor
    X = X[keep]
    G = f.grad(X)
    d = X.shape[1]
    N = np.empty_like(G)
    for j in range(d):
        E = np.zeros(d)
        E[j] = h
        N[:, j] = (f.pdf(X + E) - f.pdf(X - E)) / (2 * h)
    scale = np.maximum(np.linalg.norm(G, axis=1), 1e-300)
    return float(np.max(np.linalg.norm(G - N, axis=1) / scale)) if len(X) else 0.0


# ----------------------------------------------------------------------
# worked constants

def lambda_gaussian(d, beta):
    """beta^{1/2} e^{-1/2} (2 pi)^{-d / (2 beta)}, valid for every tau."""
    return beta ** 0.5 * e ** -0.5 * (2 * pi) ** (-d / (2 * beta))


def lambda_laplace(d, beta):
    """(d+1)^{(d+1)/2} / (d! V_d)^{1/beta}, valid for tau <= tau_laplace(d)."""
    return (d + 1) ** ((d + 1) / 2) / (factorial(d) * unit_ball_volume(d)) ** (1 / beta)


def tau_laplace(d):
    """Largest tau covered by the Laplace constant: (d+1)^{d/2} / (d! V_d)."""
    return (d + 1) ** (d / 2) / (factorial(d) * unit_ball_volume(d))


def lambda_bump(d, beta, f=None):
    """8 C^{1/beta} beta^2 e^{-2} sigma^{1 + d/beta}, valid for every tau."""
    f = f or BumpDensity(d)
    sigma = f.sigma2 ** 0.5
    return 8 * f.C ** (1 / beta) * beta ** 2 * e ** -2 * sigma ** (1 + d / beta)


def lambda_holder(beta, L):
    """Lambda(beta, L) = L^{1/beta} (1 - 1/beta)^{-1 + 1/beta} for beta in (1, 2]."""
    if not (1.0 < beta <= 2.0):
        raise OutOfRange("beta must lie in (1, 2]")
    if not L > 0:
        raise OutOfRange("L must be positive")
    return L ** (1 / beta) * (1 - 1 / beta) ** (-1 + 1 / beta)


def worked_examples(d, beta=2.0):
    """(name, density, params) for the three smooth-enough worked families."""
    return [
        ("gaussian", GaussianDensity(d=d), SeparationParams(beta, lambda_gaussian(d, beta))),
        ("laplace", LaplaceDensity(d), SeparationParams(beta, lambda_laplace(d, beta), tau_laplace(d))),
        ("bump", BumpDensity(d), SeparationParams(beta, lambda_bump(d, beta))),
    ]


# ----------------------------------------------------------------------
# structural checks

def nesting_constant(d, B=None):
    """B_d = sup of isotropic log-concave densities on R^d.

    B_1 = 1, the maximum of the one-dimensional envelope. For d >= 2 the
    value must be supplied.
    """
    if B is not None:
        return float(B)
    if d == 1:
        from .envelope1d import sup_F
        return sup_F()
    raise MissingConstant(f"B_{d} has no closed form; supply it explicitly")


def random_affine(d, rng):
    """Well-conditioned random invertible affine map (M, t)."""
    while True:
        M = rng.normal(size=(d, d))
        if np.linalg.cond(M) < 20:
            return M, rng.normal(size=d)


def nesting_checks(f, params, alpha=None, B=None, n_maps=3, seed=0, pair_budget=20000):
    """Affine invariance and beta-nesting of the certificates for f.

    Returns a dict with the base certificate, the certificates of f pushed
    through ``n_maps`` random affine maps, and (when ``alpha`` is given)
    the certificate at (alpha, B_d^{1/alpha - 1/beta} Lambda, tau).
    """
    rng = _rng(seed)
    base = check_separation_pairs(f, params, pair_budget, seed)
    maps = []
    for _ in range(n_maps):
        M, t = random_affine(f.dim, rng)
        g = AffineTransformed(f, M, t)
        maps.append(check_separation_pairs(g, params, pair_budget, seed))
    out = {"base": base, "affine": maps,
           "affine_invariant": all(c.passed == base.passed
                                   and abs(c.worst_ratio - base.worst_ratio) <= 1e-6 * max(1.0, base.worst_ratio)
                                   for c in maps)}
    if alpha is not None:
        if not 1.0 <= alpha < params.beta:
            raise OutOfRange("need 1 <= alpha < beta")
        Bd = nesting_constant(f.dim, B)
        lam2 = Bd ** (1 / alpha - 1 / params.beta) * params.lam
        p2 = SeparationParams(alpha, lam2, params.tau)
        out["nested"] = check_separation_pairs(f, p2, pair_budget, seed)
        out["nested_lambda"] = lam2
    return out


def empirical_floor(d, beta=2.0, seed=0):
    """Smallest gradient-certified Lambda over the worked families.

    Only an empirical stand-in for the existential lower bound on Lambda
    below which the classes are empty.
    """
    vals = []
    for name, f, p in worked_examples(d, beta):
        vals.append(gradient_ratio_sup(f, beta, p.tau, seed=seed))
    return float(min(vals))
