import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bstraight.models import get_model, mink
from bstraight.straightening import (Chain, VertexTuple, as_sigma, chain_l1_norm, coned_simplex, face,
                                     geodesic_homotopy, lipschitz_estimate, sample_face_sigma,
                                     sample_sigma, straighten_chain, straighten_point,
                                     verify_equivariance, verify_face_compatibility, vertex_sigma)

from conftest import accurate_grid

H2, H3 = get_model("h2"), get_model("h3")
PROD = get_model("h2xh2")


def tuple_for(name, seed, k=None, radius=1.0):
    m = get_model(name)
    rng = np.random.default_rng(seed)
    k = m.dim if k is None else k
    return VertexTuple.build(m, [m.random_point(rng, radius) for _ in range(k + 1)], accurate_grid(name))


def distance_to_geodesic(x1, x2, y):
    """sinh of the distance from ``y`` to the geodesic through ``x1, x2`` (single factor)."""
    basis = np.stack([x1[0], x2[0]])
    G = mink(basis[:, None], basis[None])
    coef = np.linalg.solve(G, mink(basis, y[0]))
    r = y[0] - coef @ basis
    return math.asinh(math.sqrt(max(mink(r, r), 0.0)))


def test_sigma_validation():
    as_sigma([0.6, 0.8], 1)
    with pytest.raises(ValueError):
        as_sigma([0.6, 0.6], 1)
    with pytest.raises(ValueError):
        as_sigma([-0.6, 0.8], 1)
    with pytest.raises(ValueError):
        as_sigma([0.6, 0.8], 2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = sample_sigma(rng, 3)
        assert np.all(a >= 0) and abs(a @ a - 1) <= 1e-12
        assert sample_face_sigma(rng, 3, 2)[2] == 0.0


@pytest.mark.parametrize("name", ["h2", "h3", "h4", "h2xh2"])
def test_vertex_interpolation(name):
    for s in range(3):
        V = tuple_for(name, [1, s])
        for i in range(V.k + 1):
            y = straighten_point(V, vertex_sigma(V.k, i))
            assert V.model.distance(y, V.points[i]) <= 1e-7


def test_constant_map():
    x = H3.point_from_direction([0.0, 0.6, 0.8], 0.7)
    V = VertexTuple.build(H3, [x] * 4, accurate_grid("h3"))
    rng = np.random.default_rng(2)
    for _ in range(10):
        assert H3.distance(straighten_point(V, sample_sigma(rng, 3)), x) <= 1e-8


def test_one_simplex_lands_on_geodesic():
    V = tuple_for("h3", 3, k=1)
    for t in np.linspace(0.0, 1.0, 100):
        a = np.array([math.cos(t * math.pi / 2), math.sin(t * math.pi / 2)])
        a = np.abs(a) / np.linalg.norm(a)
        y = straighten_point(V, a)
        assert distance_to_geodesic(V.points[0], V.points[1], y) <= 1e-6


def test_face_compatibility_two_simplex():
    V = tuple_for("h2", 4, radius=2.0)
    report = verify_face_compatibility(V, 25, seed=5)
    assert report.samples == 75
    assert report.max_discrepancy <= 1e-7 and report.passed


def test_edge_faces_are_vertices():
    V = tuple_for("h2", 5, k=1)
    for i in range(2):
        F = face(V, i)
        assert F.k == 0
        assert H2.distance(straighten_point(F, [1.0]), V.points[1 - i]) <= 1e-7
    with pytest.raises(ValueError):
        V.face(0).face(0)


def test_permutation_invariance():
    V = tuple_for("h3", 6, radius=2.0)
    rng = np.random.default_rng(6)
    for _ in range(10):
        perm = rng.permutation(4)
        a = sample_sigma(rng, 3)
        y = straighten_point(V, a)
        assert H3.distance(straighten_point(V.permute(perm), a[perm]), y) <= 1e-9


def test_equivariance_identity_is_exact():
    V = tuple_for("h3", 7)
    report = verify_equivariance(V, H3.identity(), 5, seed=1)
    assert report.max_discrepancy <= 1e-12


def test_equivariance_h3():
    worst = 0.0
    for s in range(50):
        V = tuple_for("h3", [8, s], radius=2.0)
        report = verify_equivariance(V, H3.random_isometry([8, s]), 1, seed=s)
        worst = max(worst, report.max_discrepancy)
    assert worst <= 1e-6


def test_equivariance_product():
    V = tuple_for("h2xh2", 9, radius=2.0)
    report = verify_equivariance(V, PROD.random_isometry(9), 20, seed=9)
    assert report.passed and report.max_discrepancy <= 1e-6


def test_equivariance_grid_check_reports_quadrature_gap():
    V = tuple_for("h2", 10)
    report = verify_equivariance(V, H2.random_isometry(10), 3, seed=1, grid_check=True)
    assert report.passed
    assert "max_grid_discrepancy" in report.to_dict()


def test_geodesic_homotopy_endpoints():
    V = tuple_for("h3", 11, radius=2.0)
    f = coned_simplex(V)
    for i in range(4):
        assert H3.distance(f(vertex_sigma(3, i)), V.points[i]) <= 1e-10
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = sample_sigma(rng, 3)
        start, end = f(a), straighten_point(V, a)
        assert H3.distance(geodesic_homotopy(f, 0.0, a), start) <= 1e-12
        assert H3.distance(geodesic_homotopy(f, 1.0, a), end) <= 1e-7
        mid = geodesic_homotopy(f, 0.5, a)
        assert abs(H3.distance(mid, start) - H3.distance(mid, end)) <= 1e-8
    with pytest.raises(ValueError):
        geodesic_homotopy(f, 1.5, a)


def test_homotopy_equivariance():
    V = tuple_for("h2", 12, radius=2.0)
    g = H2.random_isometry(12)
    a = sample_sigma(np.random.default_rng(12), 2)
    moved = geodesic_homotopy(coned_simplex(V.transform(g)), 0.3, a)
    assert H2.distance(moved, H2.apply_point(g, geodesic_homotopy(coned_simplex(V), 0.3, a))) <= 1e-7


def test_chain_norms():
    assert chain_l1_norm(Chain()) == 0.0
    V = [tuple_for("h2", [13, s]) for s in range(3)]
    c = Chain([(1.0, V[0]), (-2.0, V[1]), (0.5, V[2])])
    assert chain_l1_norm(c) == 3.5
    assert chain_l1_norm(straighten_chain(c)) == 3.5
    with pytest.raises(ValueError):
        Chain([(0.0, V[0])])


def test_straightening_merges_and_contracts():
    V = tuple_for("h2", 14)
    f, g = coned_simplex(V), coned_simplex(V)
    c = Chain([(1.0, f), (2.0, g), (-1.5, tuple_for("h2", 15))])
    st_c = straighten_chain(c)
    assert len(st_c) == 2
    assert chain_l1_norm(st_c) <= chain_l1_norm(c)
    assert chain_l1_norm(straighten_chain(Chain([(1.0, f), (-1.0, g)]))) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
def test_straightened_points_are_valid(b):
    V = tuple_for("h2", 16, radius=2.0)
    a = np.sqrt(np.array(b) / sum(b))
    y = straighten_point(V, a / np.linalg.norm(a))
    H2.check_point(y, tol=1e-10)


def test_lipschitz_estimate_is_finite():
    V = tuple_for("h3", 17, radius=2.0)
    L = lipschitz_estimate(V, 10, seed=3)
    assert 0.0 < L < 1e3
