import numpy as np
import pytest

from logconcave.errors import NotNested, OutOfRange, WrongDimension
from logconcave.invelopes import (VERTEX_ATOL, Invelope, build_P, complement_volume,
                                  invelope_contains, mc_complement_volume, projected_volume_check,
                                  reflection_defect, shell_triangulation, shell_volume,
                                  simplex_invelope, vertex_growth_fit)


@pytest.mark.parametrize("d", [2, 3])
def test_membership_trivial_cases(d):
    J = Invelope(2.0 ** -d, d)
    assert invelope_contains(J, np.full(d, 0.5))
    rng = np.random.default_rng(d)
    X = rng.uniform(size=(50, d))
    X[np.arange(50), rng.integers(0, d, 50)] = rng.integers(0, 2, 50)
    assert not np.any(invelope_contains(Invelope(1e-6, d), X))


def test_membership_equality_case():
    assert invelope_contains(Invelope(1 / 16, 2), np.array([0.25, 0.25]))
    assert not invelope_contains(Invelope(1 / 16, 2), np.array([0.25, 0.24]))


def test_out_of_range():
    with pytest.raises(OutOfRange):
        Invelope(0.3, 2)
    with pytest.raises(OutOfRange):
        build_P(0.3, 2)
    with pytest.raises(OutOfRange):
        simplex_invelope(0.2, 2)
    with pytest.raises(WrongDimension):
        build_P(0.1, 1)


def test_complement_volume_values():
    assert complement_volume(Invelope(1 / 16, 2)) == pytest.approx(0.25 * (1 + np.log(4)), rel=1e-14)
    assert complement_volume(Invelope(1 / 16, 2)) == pytest.approx(0.596574, abs=1e-6)
    assert complement_volume(Invelope(0.25, 2)) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("d", [2, 3])
def test_complement_volume_scaling(d):
    eta = 1 / 64 if d == 2 else 1 / 512
    assert complement_volume(Invelope(4 * eta, d)) <= 4 * complement_volume(Invelope(eta, d))


@pytest.mark.parametrize("d, eta", [(2, 1 / 16), (2, 1e-3), (3, 1e-3)])
def test_complement_volume_monte_carlo(d, eta):
    J = Invelope(eta, d)
    est, se = mc_complement_volume(J, n=200_000, seed=3)
    assert est == pytest.approx(complement_volume(J), abs=5 * se)


def test_single_point():
    P = build_P(0.25, 2)
    assert P.vertex_count == 1 and P.volume == 0.0
    assert np.allclose(P.vertices, 0.5)


@pytest.mark.parametrize("d, eta", [(2, 2.0 ** -8), (2, 1e-3), (3, 2.0 ** -8)])
def test_containment_and_reflections(d, eta):
    P = build_P(eta, d)
    J = Invelope(eta, d)
    assert np.all(invelope_contains(J, P.vertices, VERTEX_ATOL))
    assert np.all(invelope_contains(J, P.sample(10_000, seed=1), VERTEX_ATOL))
    assert reflection_defect(P) < 1e-12


def test_nesting():
    small, big = build_P(2.0 ** -6, 2), build_P(2.0 ** -10, 2)
    assert np.all(big.contains(small.vertices))
    witness = big.vertices[np.argmin(big.vertices.sum(axis=1))]
    assert not small.contains(witness)[0]
    assert big.volume > small.volume


def test_vertex_growth_d2():
    etas = [2.0 ** -k for k in (4, 6, 8, 10, 12, 14)]
    counts = [build_P(e, 2).vertex_count for e in etas]
    assert counts == sorted(counts)
    slope, _, r2 = vertex_growth_fit(counts, etas, 2)
    assert slope > 0 and r2 > 0.95


def test_growth_fit_exact_line():
    etas = np.array([1e-2, 1e-3, 1e-4])
    slope, icpt, r2 = vertex_growth_fit(3 * np.log(1 / etas) + 2, etas, 2)
    assert slope == pytest.approx(3) and icpt == pytest.approx(2) and r2 == pytest.approx(1)


def test_shell_fan_to_point():
    P = build_P(2.0 ** -8, 2)
    S = shell_triangulation(P, build_P(0.25, 2))
    assert len(S) == P.vertex_count
    assert shell_volume(S) == pytest.approx(P.volume, rel=1e-12)


def test_shell_between_polytopes():
    outer, inner = build_P(2.0 ** -10, 2), build_P(2.0 ** -6, 2)
    S = shell_triangulation(outer, inner)
    assert shell_volume(S) == pytest.approx(outer.volume - inner.volume, rel=5e-3)
    # each probe lies in the interior of at most one simplex
    X = outer.sample(1000, seed=2)
    hits = np.sum([s.contains(X, open_=True) for s in S], axis=0)
    assert np.all(hits <= 1)
    # the shell misses the inner interior
    assert not np.any(hits[inner.contains(X, tol=-1e-9)])


def test_shell_not_nested():
    with pytest.raises(NotNested):
        shell_triangulation(build_P(2.0 ** -6, 2), build_P(2.0 ** -10, 2))


def test_simplex_invelope_membership():
    S = simplex_invelope(1 / 27, 2)
    assert S.contains(np.full(3, 1 / 3))[0]
    assert not np.any(S.contains(np.eye(3)))


def test_simplex_projection_ratio():
    v_set, v_proj = projected_volume_check(simplex_invelope(0.05, 2), n=10 ** 6, seed=0)
    assert v_set / v_proj == pytest.approx(np.sqrt(3), rel=0.01)
