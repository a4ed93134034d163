"""Envelope of the isotropic log-concave densities on the real line.

F(x) is the supremum of g(x) over all log-concave densities g on R with
mean 0 and variance 1. For |x| <= 1 it has the closed form (2 - x^2)^{-1/2};
otherwise the extremal density is a truncated exponential, parametrized by
a rate lambda in (0, 1).

With Y ~ Exp(1) truncated to [0, s), write

    V(s) = Var(Y | Y < s) = 1 - s^2 / (2 (cosh s - 1)).

A rate lambda fixes s = V^{-1}(lambda^2) and K = s / lambda, the support
length of the standardized truncated Exp(lambda). Its mean m(lambda) and
the upper end a(lambda) = K - m give the two branches of F.

Internally every quantity is computed from s (lambda = V(s)^{1/2}), which
avoids inverting V where it is flat (lambda near 1). The public functions
of lambda go through :func:`V_inv`.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

SQRT3 = math.sqrt(3.0)
SERIES_CUT = 1e-2
S_LO, S_HI = 1e-8, 200.0


def _one_minus_V(s):
    u = 0.5 * s
    return (u / math.sinh(u)) ** 2


def V(s):
    """Variance of Exp(1) conditioned on [0, s); increasing from 0 to 1."""
    s = float(s)
    if s <= 0:
        raise ValueError("V is defined for s > 0")
    if s < SERIES_CUT:
        s2 = s * s
        return s2 / 12 - s2 ** 2 / 240 + s2 ** 3 / 6048 - s2 ** 4 / 172800
    if s > 40:
        return 1.0 - _one_minus_V(s)
    return 1.0 - s * s / (2.0 * (math.cosh(s) - 1.0))


def V_inv(v, tol=1e-12):
    """Inverse of V by bisection on [1e-8, 200]."""
    if not 0.0 < v < 1.0:
        raise ValueError("V_inv needs v in (0, 1)")
    lo, hi = S_LO, S_HI
    if V(lo) >= v:
        return lo
    if V(hi) <= v:
        return hi
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if V(mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _lam(s):
    return math.sqrt(V(s))


def _mean_trunc(s):
    """1 - s / (e^s - 1): mean of Exp(1) on [0, s) times 1 (the scale-free part)."""
    if s < SERIES_CUT:
        s2 = s * s
        return s / 2 - s2 / 12 + s2 ** 2 / 720 - s2 ** 3 / 30240
    if s > 700:
        return 1.0
    return 1.0 - s / math.expm1(s)


def _m_of_s(s):
    return _mean_trunc(s) / _lam(s)


def _a_of_s(s):
    lam = _lam(s)
    return s / lam - _mean_trunc(s) / lam


def K(lam):
    """Support length K(lambda) = V^{-1}(lambda^2) / lambda."""
    return V_inv(lam * lam) / lam


def m(lam):
    """Mean of the truncated Exp(lambda) with unit variance, in (1, sqrt 3)."""
    return _m_of_s(V_inv(lam * lam))


def a(lam):
    """Upper support end K(lambda) - m(lambda), in (sqrt 3, infinity)."""
    return _a_of_s(V_inv(lam * lam))


def _solve_s(fun, target, hi=S_HI):
    f = lambda s: fun(s) - target
    lo = S_LO
    # x next to sqrt 3 needs s below S_LO; x far out needs s above S_HI
    while f(hi) * f(lo) > 0 and lo > 1e-300:
        lo *= 1e-3
    while f(hi) * f(lo) > 0 and hi < 1e4:
        hi *= 2
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def m_inv(x):
    """lambda with m(lambda) = x, for x in (1, sqrt 3)."""
    return _lam(_solve_s(_m_of_s, x))


def a_inv(x):
    """lambda with a(lambda) = x, for x > sqrt 3."""
    return _lam(_solve_s(_a_of_s, x, hi=max(S_HI, 2 * x + 10)))


def _F_scalar(x):
    x = abs(float(x))
    if x <= 1.0:
        return 1.0 / math.sqrt(2.0 - x * x)
    if x == SQRT3:
        return 1.0 / (2.0 * SQRT3)
    if x < SQRT3:
        s = _solve_s(_m_of_s, x)
        return _lam(s) / -math.expm1(-s)
    s = _solve_s(_a_of_s, x, hi=max(S_HI, 2 * x + 10))
    return _lam(s) / math.expm1(s)


def envelope_F(x):
    """Envelope F(x) (scalar or array)."""
    if np.ndim(x) == 0:
        return _F_scalar(x)
    x = np.asarray(x, dtype=float)
    return np.vectorize(_F_scalar, otypes=[float])(x)


def bounds(x):
    """(lower, upper): e^{-(x+1)} (for x >= -1, else 0) and min(1, e^{1-|x|})."""
    x = np.asarray(x, dtype=float)
    lower = np.where(x >= -1, np.exp(-(x + 1)), 0.0)
    upper = np.minimum(1.0, np.exp(1.0 - np.abs(x)))
    return lower, upper


def duality_check(lam):
    """|F(a(lambda)) - F(m(lambda)) e^{-lambda K(lambda)}|."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    s = V_inv(lam * lam)
    return abs(envelope_F(_a_of_s(s)) - envelope_F(_m_of_s(s)) * math.exp(-s))


@dataclass
class EnvelopeParam:
    """lambda with K, m, a; s = lambda K."""

    lam: float
    K: float
    m: float
    a: float

    @classmethod
    def from_lambda(cls, lam):
        s = V_inv(lam * lam)
        return cls(lam, s / lam, _m_of_s(s), _a_of_s(s))


@dataclass
class ExtremalDensity:
    """Density in the isotropic class attaining F at ``anchor``.

    ``form`` is "two_sided" (C, a1, a2): C exp(-(w-x)/a1) for w >= x and
    C exp((w-x)/a2) for w < x; or "truncated_exp" (C, rate, lo, hi):
    C exp(-rate (w - x)) on [lo, hi]. The uniform on [-sqrt 3, sqrt 3] is
    "truncated_exp" with rate 0.
    """

    form: str
    anchor: float
    params: dict

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        p, x = self.params, self.anchor
        if self.form == "two_sided":
            with np.errstate(over="ignore"):
                return p["C"] * np.where(w >= x, np.exp(-(w - x) / p["a1"]), np.exp((w - x) / p["a2"]))
        inside = (w >= p["lo"]) & (w <= p["hi"])
        with np.errstate(over="ignore"):
            val = p["C"] * np.exp(-p["rate"] * (w - x))
        return np.where(inside, val, 0.0)

    def support(self):
        if self.form == "two_sided":
            return -np.inf, np.inf
        return self.params["lo"], self.params["hi"]

    def moments(self):
        """(mass, mean, variance) by adaptive quadrature."""
        from scipy.integrate import quad
        lo, hi = self.support()
        x = self.anchor
        pts = [x] if lo < x < hi else None

        def integ(k):
            f = lambda w: w ** k * float(self.pdf(w))
            if np.isfinite(lo) and np.isfinite(hi):
                return quad(f, lo, hi, points=pts, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
            left = quad(f, -np.inf, x, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
            right = quad(f, x, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
            return left + right

        m0, m1, m2 = integ(0), integ(1), integ(2)
        return m0, m1 / m0, m2 / m0 - (m1 / m0) ** 2


def extremal_density(x):
    """The isotropic log-concave density with f(x) = F(x)."""
    x = float(x)
    ax = abs(x)
    sign = 1.0 if x >= 0 else -1.0
    if ax < 1.0:
        C = 1.0 / math.sqrt(2.0 - x * x)
        return ExtremalDensity("two_sided", x, {"C": C, "a1": (1 / C - x) / 2, "a2": (1 / C + x) / 2})
    if ax == 1.0:
        # 1 - Y for x = 1, Y - 1 for x = -1, with Y ~ Exp(1)
        return ExtremalDensity("truncated_exp", x,
                               {"C": 1.0, "rate": -sign, "lo": -np.inf if x > 0 else -1.0,
                                "hi": 1.0 if x > 0 else np.inf})
    if ax == SQRT3:
        return ExtremalDensity("truncated_exp", x,
                               {"C": 1 / (2 * SQRT3), "rate": 0.0, "lo": -SQRT3, "hi": SQRT3})
    if ax < SQRT3:
        # mirror image of the standardized truncated Exp(lambda): support [-a, m]
        s = _solve_s(_m_of_s, ax)
        lam = _lam(s)
        C = lam / -math.expm1(-s)
        lo, hi = -_a_of_s(s), ax
        rate = -lam
    else:
        s = _solve_s(_a_of_s, ax, hi=max(S_HI, 2 * ax + 10))
        lam = _lam(s)
        C = lam / math.expm1(s)
        lo, hi = -_m_of_s(s), ax
        rate = lam
    if sign < 0:
        lo, hi, rate = -hi, -lo, -rate
    return ExtremalDensity("truncated_exp", x, {"C": C, "rate": rate, "lo": lo, "hi": hi, "lambda": lam})


def sup_F(grid=None):
    """Numerical sup of F (the nesting constant B_1); equals F(1) = 1."""
    if grid is None:
        grid = np.linspace(-10, 10, 20001)
    return float(np.max(envelope_F(grid)))


def envelope_table(lo, hi, step):
    """Rows (x, F(x), lower bound, upper bound) on lo:hi:step."""
    n = int(round((hi - lo) / step)) + 1
    x = lo + step * np.arange(n)
    F = envelope_F(x)
    lower, upper = bounds(x)
    return np.column_stack([x, F, lower, upper])
