import math

import numpy as np
import pytest

from logconcave.densities import min_affine_density
from logconcave.envelope1d import (EnvelopeParam, K, V, V_inv, a, bounds, duality_check,
                                   envelope_F, envelope_table, extremal_density, m, sup_F)
from logconcave.geometry import convex_hull

SQRT3 = math.sqrt(3)


def test_V_limits():
    assert V(0.01) == pytest.approx(0.01 ** 2 / 12, rel=1e-4)
    assert V(0.01) == pytest.approx(8.3333e-6, rel=1e-4)
    assert V(50.0) > 1 - 1e-9
    s = 3.7
    assert V_inv(V(s)) == pytest.approx(s, rel=1e-9)


def test_V_matches_direct_formula():
    for s in (0.05, 0.5, 2.0, 10.0):
        assert V(s) == pytest.approx(1 - s * s / (2 * (math.cosh(s) - 1)), rel=1e-10)


def test_K_limit_at_zero():
    assert K(1e-4) == pytest.approx(math.sqrt(12), rel=1e-6)


def test_identities():
    assert envelope_F(0.0) == pytest.approx(2 ** -0.5, abs=1e-12)
    assert envelope_F(1.0) == pytest.approx(1.0, abs=1e-12)
    assert envelope_F(SQRT3) == pytest.approx(1 / (2 * SQRT3), abs=1e-12)
    x = np.array([-2.5, -0.3, 0.3, 2.5])
    assert envelope_F(x) == pytest.approx(envelope_F(-x), abs=1e-14)


def test_continuity_at_branch_points():
    for x0 in (1.0, SQRT3):
        assert envelope_F(x0 - 1e-9) == pytest.approx(envelope_F(x0 + 1e-9), abs=1e-6)


@pytest.mark.parametrize("lam", [0.05, 0.5, 0.95])
def test_duality(lam):
    assert duality_check(lam) < 1e-8


def test_param_ranges_and_monotonicity():
    grid = np.linspace(0.005, 0.995, 200)
    P = [EnvelopeParam.from_lambda(l) for l in grid]
    ms = np.array([p.m for p in P])
    As = np.array([p.a for p in P])
    Ks = np.array([p.K for p in P])
    assert np.all(np.diff(ms) < 0) and np.all(np.diff(As) > 0) and np.all(np.diff(Ks) > 0)
    assert np.all((ms > 1) & (ms < SQRT3)) and np.all(As > SQRT3) and np.all(Ks > 2 * SQRT3)
    for p in P[::20]:
        assert V(p.lam * p.K) == pytest.approx(p.lam ** 2, abs=1e-10)
        assert m(p.lam) == pytest.approx(p.m, rel=1e-9) and a(p.lam) == pytest.approx(p.a, rel=1e-9)


def test_grid_bounds():
    x = np.round(np.arange(-1000, 1001) * 0.01, 10)
    F = envelope_F(x)
    lo, hi = bounds(x)
    assert np.all(F >= lo - 1e-12) and np.all(F <= hi + 1e-12)


def test_asymptotics():
    assert abs(math.exp(21.0) * envelope_F(20.0) - 1) < 0.05


@pytest.mark.parametrize("x", [0.0, 0.4, -0.7, 1.0, -1.0, 1.4, SQRT3, 2.2, -3.0, 5.0])
def test_extremal_density(x):
    g = extremal_density(x)
    mass, mean, var = g.moments()
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(0.0, abs=1e-8)
    assert var == pytest.approx(1.0, abs=1e-8)
    assert float(g.pdf(x)) == pytest.approx(envelope_F(x), abs=1e-8)


def test_extremal_examples():
    g = extremal_density(0.0)
    assert g.form == "two_sided"
    assert g.params["C"] == pytest.approx(2 ** -0.5) and g.params["a1"] == pytest.approx(2 ** -0.5)
    assert g.params["a2"] == pytest.approx(2 ** -0.5)
    u = extremal_density(SQRT3)
    assert u.support() == pytest.approx((-SQRT3, SQRT3))
    e1 = extremal_density(1.0)
    w = np.array([-2.0, 0.0, 0.5])
    # density of 1 - Y with Y ~ Exp(1)
    assert e1.pdf(w) == pytest.approx(np.exp(-(1 - w)), rel=1e-14)


def _standardized_test_densities():
    """20 log-concave densities with mean 0 and variance 1, as callables."""
    out = [lambda x: np.exp(-x * x / 2) / np.sqrt(2 * np.pi),
           lambda x: np.exp(-np.sqrt(2) * np.abs(x)) / np.sqrt(2),
           lambda x: np.where(np.abs(x) <= SQRT3, 1 / (2 * SQRT3), 0.0),
           lambda x: np.where(x >= -1, np.exp(-(x + 1)), 0.0)]
    rng = np.random.default_rng(0)
    while len(out) < 20:
        k = rng.integers(1, 4)
        lo, hi = -rng.uniform(0.5, 3), rng.uniform(0.5, 3)
        f = min_affine_density(convex_hull(np.array([[lo], [hi]])), rng.normal(size=(k, 1)),
                               rng.normal(size=k))
        mu, S = f.moments()
        sd = math.sqrt(S[0, 0])
        out.append(lambda x, f=f, mu=mu[0], sd=sd: sd * f.pdf((mu + sd * np.asarray(x))[:, None]))
    return out


def test_domination():
    x = np.round(np.arange(-1000, 1001) * 0.01, 10)
    F = envelope_F(x)
    for g in _standardized_test_densities():
        assert np.all(g(x) <= F + 1e-9)


def test_sup_and_table():
    assert sup_F() == pytest.approx(1.0, abs=1e-12)
    T = envelope_table(-1.0, 1.0, 0.5)
    assert T.shape == (5, 4)
    assert T[2, 1] == pytest.approx(2 ** -0.5)
