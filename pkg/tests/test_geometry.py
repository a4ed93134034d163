import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logconcave.errors import DegenerateInput, WrongDimension
from logconcave.geometry import (Polytope, Simplex, Subdivision, convex_hull, euler_check, gamma,
                                 triangulate, validate_subdivision)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
CUBE = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float)
TET = np.vstack([np.zeros(3), np.eye(3)])


def _same_rows(A, B, tol=1e-9):
    return len(A) == len(B) and all(np.min(np.max(np.abs(B - a), axis=1)) <= tol for a in A)


def test_square_hull():
    P = convex_hull(SQUARE)
    assert len(P.vertices) == 4 and P.facet_count == 4
    assert P.volume == pytest.approx(1.0, rel=1e-12)


def test_interior_point_dropped():
    P = convex_hull(np.vstack([SQUARE, [[0.5, 0.5]]]))
    assert _same_rows(P.vertices, SQUARE)


def test_disk_points_inside_every_facet():
    rng = np.random.default_rng(3)
    r, t = np.sqrt(rng.uniform(size=20)), rng.uniform(0, 2 * np.pi, 20)
    X = np.column_stack([r * np.cos(t), r * np.sin(t)])
    P = convex_hull(X)
    # brute force: every input satisfies every facet inequality
    assert np.all(X @ P.A.T <= P.b + 1e-12)
    assert all(np.min(np.max(np.abs(X - v), axis=1)) == 0 for v in P.vertices)


def test_degenerate_hull():
    with pytest.raises(DegenerateInput):
        convex_hull(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))


def test_hull_idempotent():
    X = np.random.default_rng(0).normal(size=(40, 3))
    P = convex_hull(X)
    assert _same_rows(convex_hull(P.vertices).vertices, P.vertices)


@pytest.mark.parametrize("V, count", [(np.array([[0.0, 0], [1, 0], [0, 1]]), 1), (SQUARE, 2)])
def test_triangulate_small(V, count):
    S = triangulate(convex_hull(V))
    assert len(S) == count
    assert sum(s.volume for s in S) == pytest.approx(convex_hull(V).volume, rel=1e-12)


def test_triangulate_cube_count_and_volume():
    S = triangulate(convex_hull(CUBE))
    assert 5 <= len(S) <= 3 * 8 - 11
    assert sum(s.volume for s in S) == pytest.approx(1.0, rel=1e-10)


def test_triangulation_interiors_disjoint():
    X = np.random.default_rng(1).normal(size=(25, 3))
    P = convex_hull(X)
    S = triangulate(P)
    assert len(S) <= 6 * P.facet_count
    assert sum(s.volume for s in S) == pytest.approx(P.volume, rel=1e-8)
    lo, hi = X.min(axis=0), X.max(axis=0)
    Y = np.random.default_rng(2).uniform(lo, hi, size=(1000, 3))
    hits = sum(s.contains(Y, tol=1e-12, open_=True).astype(int) for s in S)
    assert hits.max() <= 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 3), st.integers(8, 30))
def test_triangulation_partition_property(seed, d, n):
    X = np.random.default_rng(seed).normal(size=(n, d))
    P = convex_hull(X)
    assert P.facet_count >= d + 1
    vol = sum(s.volume for s in triangulate(P))
    assert vol == pytest.approx(P.volume, rel=1e-8)


def test_gamma_canonical():
    tri = convex_hull(np.array([[0.0, 0], [1, 0], [0, 1]]))
    assert gamma([tri]) == 3
    assert gamma([convex_hull(TET)]) == 4
    # three cones from 0 over the edges of a triangle containing 0
    T = np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]])
    cones = [Polytope.from_vertices_rays([[0.0, 0.0]], [T[i], T[(i + 1) % 3]]) for i in range(3)]
    assert gamma(Subdivision(cones)) == 6


def test_validate_subdivision_cases():
    a = convex_hull(np.array([[0.0, 0], [1, 0], [0, 1]]))
    b = convex_hull(np.array([[1.0, 0], [1, 1], [0, 1]]))
    assert validate_subdivision([a, b])["valid"]
    c = convex_hull(np.array([[0.2, 0.2], [1.2, 0.2], [0.2, 1.2]]))
    rep = validate_subdivision([a, c])
    assert not rep["valid"]
    assert any(v[0] == "interior_intersection" for v in rep["violations"])


def test_square_by_diagonals():
    c = np.array([0.5, 0.5])
    cells = [convex_hull(np.array([SQUARE[i], SQUARE[(i + 1) % 4], c])) for i in range(4)]
    rep = validate_subdivision(cells, support=convex_hull(SQUARE))
    assert rep["valid"]
    assert gamma(cells) == 12


def test_non_common_face_detected():
    # a T-junction: the big triangle's edge holds the small cells' vertex
    big = convex_hull(np.array([[0.0, 0], [2, 0], [1, 1]]))
    l = convex_hull(np.array([[0.0, 0], [1, 0], [1, -1]]))
    r = convex_hull(np.array([[1.0, 0], [2, 0], [1, -1]]))
    rep = validate_subdivision([big, l, r])
    assert any(v[0] == "not_common_face" for v in rep["violations"])


def test_euler():
    assert euler_check(convex_hull(TET))
    assert euler_check(convex_hull(CUBE))
    assert euler_check(convex_hull(np.random.default_rng(5).normal(size=(30, 3))))
    with pytest.raises(WrongDimension):
        euler_check(convex_hull(SQUARE))


def test_halfspace_roundtrip_and_json():
    P = convex_hull(np.random.default_rng(4).normal(size=(15, 2)))
    Q = Polytope.from_halfspaces(P.A, P.b)
    assert _same_rows(Q.vertices, P.vertices, 1e-9)
    R = Polytope.from_json(P.to_json())
    assert R.volume == pytest.approx(P.volume, rel=1e-12)


def test_unbounded_cone():
    K = Polytope.from_vertices_rays([[0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    assert not K.is_bounded and K.facet_count == 2
    assert K.contains(np.array([[5.0, 7.0]]))[0]
    assert not K.contains(np.array([[-1.0, 1.0]]))[0]


def test_simplex_degenerate():
    from logconcave.errors import DegenerateSimplex
    with pytest.raises(DegenerateSimplex):
        Simplex([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
