import numpy as np
import pytest

from logconcave.densities import GaussianDensity
from logconcave.divergences import dx_sq
from logconcave.errors import DegenerateInput
from logconcave.geometry import convex_hull
from logconcave.mle import FitConfig, TentFunction, fit, objective, upper_hull_tent


def test_tent_two_sites():
    t = upper_hull_tent([0.0, 1.0], [0.0, 0.0])
    assert t(np.array([[0.3], [0.9]])) == pytest.approx([0.0, 0.0])


def test_tent_ignores_low_middle_site():
    t = upper_hull_tent([0.0, 0.5, 1.0], [0.0, -1.0, 0.0])
    assert t(np.array([[0.5]]))[0] == pytest.approx(0.0, abs=1e-15)


def test_tent_pyramid():
    X = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])
    t = upper_hull_tent(X, [0, 0, 0, 0, 1.0])
    assert len(t.simplices) == 4
    assert t(np.array([[0.5, 0.5], [0.25, 0.5]])) == pytest.approx([1.0, 0.5])


def test_tent_degenerate():
    with pytest.raises(DegenerateInput):
        upper_hull_tent([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], [0, 0, 0])


def test_objective_plugin_values():
    X = np.random.default_rng(0).uniform(size=(12, 2))
    vol = convex_hull(X).volume
    t = TentFunction(X, np.full(12, -np.log(vol)))
    assert objective(t) == pytest.approx(np.log(vol) + 1, rel=1e-12)
    # Uniform[0,2] on {0,1,2}
    t = TentFunction(np.array([[0.0], [1.0], [2.0]]), np.full(3, -np.log(2)))
    assert objective(t) == pytest.approx(np.log(2) + 1, rel=1e-14)


def test_objective_shift_identity():
    X = np.random.default_rng(1).normal(size=(15, 1))
    y = -0.5 * X[:, 0] ** 2
    t = TentFunction(X, y)
    I0 = t.integral()
    for c in (-0.3, 0.2):
        shifted = TentFunction(X, y + c)
        assert objective(shifted) - objective(t) == pytest.approx(-c + (np.exp(c) - 1) * I0, rel=1e-10)
    # at a normalized tent the derivative in c vanishes
    tn = TentFunction(X, y - np.log(I0))
    h = 1e-6
    deriv = (objective(TentFunction(X, tn.heights + h)) - objective(TentFunction(X, tn.heights - h))) / (2 * h)
    assert abs(deriv) < 1e-8


def test_fit_two_points_uniform():
    res = fit(np.array([[0.0], [1.0]]))
    x = np.linspace(0, 1, 11)[:, None]
    assert np.max(np.abs(res.logpdf(x))) < 1e-4
    assert res.converged


def test_fit_triangle_vertices_uniform():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    res = fit(V)
    x = np.array([[0.2, 0.2], [0.5, 0.1], [0.0, 0.0]])
    assert np.max(np.abs(res.logpdf(x) - np.log(2.0))) < 1e-4


def test_fit_deterministic_and_optimal():
    g = GaussianDensity(d=1)
    X = g.sample(200, 3)
    a, b = fit(X), fit(X)
    assert np.array_equal(a.log_density.heights, b.log_density.heights)
    assert dx_sq(a.density(), g, X) >= -1e-9


def test_optimality_certificate():
    X = np.random.default_rng(4).normal(size=(60, 2))
    res = fit(X)
    t = res.log_density
    s0 = objective(t, res.weights)
    rng = np.random.default_rng(5)
    for _ in range(100):
        y = t.heights + rng.uniform(-0.1, 0.1, size=len(t.heights))
        assert objective(TentFunction(t.sites, y), res.weights) >= s0 - 1e-10


@pytest.mark.parametrize("d, n", [(1, 50), (2, 50)])
def test_fit_invariants(d, n):
    X = np.random.default_rng(10 * d + n).normal(size=(n, d))
    res = fit(X)
    assert abs(res.integral - 1) < 1e-6
    assert np.all(res.log_density.concavity_residuals() >= -1e-9)
    mu, _ = res.density().moments()
    assert np.max(np.abs(mu - X.mean(axis=0))) < 1e-4
    # support is the hull of the data
    hull = convex_hull(X)
    assert res.log_density.support_hull.volume == pytest.approx(hull.volume, rel=1e-12)
    tr = res.objective_trace
    assert all(b <= a for a, b in zip(tr, tr[1:]))


def test_duplicates_merged_with_weights():
    X = np.array([[0.0], [0.0], [1.0], [2.0]])
    res = fit(X)
    assert len(res.sites) == 3 and res.weights.tolist() == [2.0, 1.0, 1.0]
    assert abs(res.integral - 1) < 1e-6


def test_near_degenerate_rejected():
    X = np.column_stack([np.linspace(0, 1, 10), 1e-12 * np.random.default_rng(0).normal(size=10)])
    with pytest.raises(DegenerateInput):
        fit(X)
    with pytest.raises(DegenerateInput):
        fit(np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_ralg_in_one_dimension_agrees_with_active_set():
    X = np.random.default_rng(6).normal(size=(40, 1))
    a = fit(X)
    b = fit(X, FitConfig(method="ralg"))
    assert b.objective() == pytest.approx(a.objective(), abs=1e-7)


def test_export_roundtrip():
    from logconcave.densities import density_from_json
    X = np.random.default_rng(7).normal(size=(30, 2))
    res = fit(X)
    f = density_from_json(res.density().to_json())
    P = X[:10] * 0.9
    assert f.logpdf(P) == pytest.approx(res.logpdf(P), abs=1e-10)
