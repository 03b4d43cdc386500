import math

import numpy as np
import pytest
from scipy.integrate import quad

from bstraight.barycenter import (DegenerateHessian, NonConvergence, SolverSettings, barycenter,
                                  g_gradient, g_value, hessian_K, local_forms, minkowski_mean)
from bstraight.boundary import BoundaryMeasure, ps_density, pushforward, weighted_combination
from bstraight.models import get_model

from conftest import accurate_grid, grid_for

H2, H3 = get_model("h2"), get_model("h3")


def test_settings_validation():
    s = SolverSettings()
    assert (s.tol, s.max_iter, s.backtrack, s.damping) == (1e-10, 100, 0.5, 1.0)
    for bad in ({"tol": 0.0}, {"max_iter": 0}, {"backtrack": 1.0}, {"damping": 0.0}):
        with pytest.raises(ValueError):
            SolverSettings(**bad)


def test_g_value_examples(rng):
    mu = ps_density(H2, grid_for("h2", 512), H2.origin())
    o = H2.origin()
    assert g_value(H2, mu, o, o) == pytest.approx(0.0, abs=1e-15)
    q = H2.random_point(rng, 1.0)
    x1, x2 = H2.random_point(rng, 2.0), H2.random_point(rng, 2.0)
    shift1 = g_value(H2, mu, x1, o) - g_value(H2, mu, x1, q)
    shift2 = g_value(H2, mu, x2, o) - g_value(H2, mu, x2, q)
    assert abs(shift1 - shift2) < 1e-10


def test_g_value_circle_average():
    x = np.array([[math.sinh(1.0), 0.0, math.cosh(1.0)]])
    mu = ps_density(H2, grid_for("h2", 512), H2.origin())
    ref, _ = quad(lambda p: math.log(math.cosh(1.0) - math.sinh(1.0) * math.cos(p)), 0, 2 * math.pi,
                  epsabs=1e-12, limit=200)
    ref /= 2 * math.pi
    assert g_value(H2, mu, x) == pytest.approx(ref, abs=1e-6)
    assert ref == pytest.approx(2 * math.log(math.cosh(0.5)), abs=1e-12)


@pytest.mark.parametrize("name", ["h2", "h3", "h4", "h5", "h2xh2"])
def test_gradient_vanishes_at_symmetric_point(name):
    m = get_model(name)
    mu = ps_density(m, accurate_grid(name), m.origin())
    assert np.max(np.abs(g_gradient(m, mu, m.origin()))) <= 1e-12


def test_hessian_anchors():
    K2 = hessian_K(H2, ps_density(H2, grid_for("h2", 512), H2.origin()), H2.origin())
    np.testing.assert_allclose(K2, 0.5 * np.eye(2), atol=1e-10)
    assert np.linalg.det(K2) == pytest.approx(0.25, abs=1e-10)
    K3 = hessian_K(H3, ps_density(H3, grid_for("h3", 2000), H3.origin()), H3.origin())
    np.testing.assert_allclose(K3, (2 / 3) * np.eye(3), atol=1e-3)


@pytest.mark.parametrize("name", ["h2", "h3", "h2xh2"])
def test_gradient_matches_finite_differences(name):
    m = get_model(name)
    grid = accurate_grid(name)
    for s in range(50):
        rng = np.random.default_rng([8, s])
        mu = ps_density(m, grid, m.random_point(rng, 2.0))
        y = m.random_point(rng, 2.0)
        u = m.random_tangent(rng, y)
        h = 1e-4
        fd = (g_value(m, mu, m.exp_map(y, u, h)) - g_value(m, mu, m.exp_map(y, u, -h))) / (2 * h)
        assert fd == pytest.approx(m.inner(g_gradient(m, mu, y), u), abs=1e-6)


def test_hessian_matches_gradient_differences(rng):
    m = H3
    mu = ps_density(m, accurate_grid("h3"), m.random_point(rng, 1.0))
    y = m.random_point(rng, 1.0)
    forms = local_forms(m, mu, y)
    np.testing.assert_allclose(forms.K, forms.K.T, atol=1e-12)
    assert np.linalg.det(forms.K) > 0
    # second directional derivative of g along geodesics equals <K u, u>
    for c in np.eye(3):
        u = m.from_coords(y, c)
        h = 1e-3
        g = [g_value(m, mu, m.exp_map(y, u, t)) for t in (-h, 0.0, h)]
        assert (g[0] - 2 * g[1] + g[2]) / h ** 2 == pytest.approx(c @ forms.K @ c, abs=1e-5)


@pytest.mark.parametrize("name", ["h2", "h3"])
def test_barycenter_of_visual_measure(name):
    m = get_model(name)
    grid = accurate_grid(name)
    for s in range(20):
        x = m.random_point(np.random.default_rng([9, s]), 1.0)
        res = barycenter(m, ps_density(m, grid, x))
        assert m.distance(res.point, x) <= 1e-8
        assert res.gradient_norm <= 1e-10


def test_two_point_midpoint():
    grid = grid_for("h2", 1024)
    x2 = np.array([[math.sinh(2.0), 0.0, math.cosh(2.0)]])
    r = 1 / math.sqrt(2)
    mu = weighted_combination([r, r], [ps_density(H2, grid, H2.origin()), ps_density(H2, grid, x2)])
    res = barycenter(H2, mu)
    mid = np.array([[math.sinh(1.0), 0.0, math.cosh(1.0)]])
    assert H2.distance(res.point, mid) <= 1e-7


def test_barycenter_equivariance_h3():
    grid = grid_for("h3", 2000)
    for s in range(30):
        rng = np.random.default_rng([10, s])
        pts = [H3.random_point(rng, 2.0) for _ in range(3)]
        a = np.sqrt(rng.dirichlet(np.ones(3)))
        mu = weighted_combination(a / np.linalg.norm(a), [ps_density(H3, grid, x) for x in pts])
        gamma = H3.random_isometry([10, s])
        moved = barycenter(H3, pushforward(H3, gamma, mu)).point
        assert H3.distance(moved, H3.apply_point(gamma, barycenter(H3, mu).point)) <= 1e-7


def test_barycenter_invariances(rng):
    grid = grid_for("h3", 2000)
    mu = weighted_combination([0.6, 0.8], [ps_density(H3, grid, H3.random_point(rng, 2.0)),
                                            ps_density(H3, grid, H3.random_point(rng, 2.0))])
    base = barycenter(H3, mu).point
    scaled = BoundaryMeasure(mu.atoms, (3.7 * mu.masses) / (3.7 * mu.masses).sum())
    assert H3.distance(barycenter(H3, scaled).point, base) <= 2e-10
    perm = np.random.default_rng(1).permutation(len(mu))
    shuffled = BoundaryMeasure(mu.atoms[perm], mu.masses[perm])
    assert H3.distance(barycenter(H3, shuffled).point, base) <= 2e-10
    # a different start changes nothing but the path
    far = H3.random_point(rng, 3.0)
    assert H3.distance(barycenter(H3, mu, init=far).point, base) <= 2e-10


def test_g_decreases_and_converges_quickly():
    for name in ("h2", "h3", "h4", "h2xh2"):
        m = get_model(name)
        grid = accurate_grid(name)
        for s in range(10):
            rng = np.random.default_rng([12, s])
            pts = [m.random_point(rng, 3.0) for _ in range(m.dim + 1)]
            a = np.sqrt(rng.dirichlet(np.ones(len(pts))))
            a /= np.linalg.norm(a)
            mu = weighted_combination(a, [ps_density(m, grid, x) for x in pts])
            res = barycenter(m, mu, init=minkowski_mean(m, pts, a * a))
            assert res.iterations <= 15
            # strict decrease, up to rounding of g on the final polish step
            assert all(b < c or b - c <= 1e-13 * max(1.0, abs(c))
                       for b, c in zip(res.history[1:], res.history[:-1]))
            assert res.history[-1] < res.history[0] or res.iterations <= 1


def test_non_convergence():
    mu = ps_density(H2, grid_for("h2", 256), H2.point_from_direction([1.0, 0.0], 3.0))
    with pytest.raises(NonConvergence):
        barycenter(H2, mu, SolverSettings(max_iter=1))


def test_degenerate_hessian():
    grid = grid_for("h2", 16)
    masses = np.full(16, 1e-18)
    masses[0] = 1.0 - 15e-18
    mu = BoundaryMeasure(grid.atoms, masses)
    with pytest.raises(DegenerateHessian):
        barycenter(H2, mu)
