"""Grids, covariant derivatives, curvature, and graph serialization."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from anisoflow.sphere_geometry import (
    RadialGraph,
    SingularMetricError,
    SphericalGrid,
    _chol_shape_operator,
    covariant_derivatives,
    embedding_oracle,
    graph_from_text,
    graph_to_text,
    load_graph,
    save_graph,
    sphere_graph,
    weingarten,
)


def circle_graph(N, fn):
    grid = SphericalGrid.circle(N)
    return RadialGraph(grid, fn(grid.theta))


def sphere2_graph(n_lat, n_lon, fn):
    grid = SphericalGrid.sphere(n_lat, n_lon)
    t = grid.theta[:, None]
    p = grid.phi_lon[None, :]
    return RadialGraph(grid, np.broadcast_to(fn(t, p), grid.shape).copy())


# ---------------------------------------------------------------------------
# grids and graphs


def test_grid_constructors_and_spacing():
    c = SphericalGrid.circle(64)
    assert c.shape == (64,)
    assert c.h == c.h_theta == 2.0 * math.pi / 64
    assert c.describe() == "n=1 N=64"
    assert_allclose(c.theta[1] - c.theta[0], c.h_theta)

    s = SphericalGrid.sphere(32, 64)
    assert s.shape == (32, 64)
    assert s.h_theta == math.pi / 32
    assert s.h_phi == 2.0 * math.pi / 64
    assert s.h == min(s.h_theta, s.h_phi)
    assert s.describe() == "n=2 N_lat=32 N_lon=64"
    # cell-centered latitudes: no node on a pole, symmetric about the equator
    assert s.theta[0] == 0.5 * s.h_theta
    assert_allclose(s.theta + s.theta[::-1], math.pi)


def test_grid_validation():
    with pytest.raises(ValueError):
        SphericalGrid.circle(8)
    with pytest.raises(ValueError):
        SphericalGrid.sphere(8, 32)
    with pytest.raises(ValueError, match="even"):
        SphericalGrid.sphere(32, 33)


def test_radial_graph_validation():
    grid = SphericalGrid.circle(16)
    with pytest.raises(ValueError):
        RadialGraph(grid, np.zeros(17))
    with pytest.raises(ValueError):
        RadialGraph(grid, np.full(16, np.nan))
    with pytest.raises(ValueError):
        sphere_graph(grid, -1.0)
    g = sphere_graph(grid, 2.0)
    assert_allclose(g.r(), 2.0)
    g2 = g.copy()
    assert g2 == g and g2.phi is not g.phi


# ---------------------------------------------------------------------------
# covariant derivatives


def test_constant_graph_derivatives_vanish_to_rounding():
    # the stencil weights cancel on constant data up to one rounding residue
    for graph in (
        sphere_graph(SphericalGrid.circle(32), 1.7),
        sphere_graph(SphericalGrid.sphere(16, 32), 1.7),
    ):
        grad, hess = covariant_derivatives(graph)
        assert_allclose(grad, 0.0, atol=1e-14)
        assert_allclose(hess, 0.0, atol=1e-13)


def test_circle_derivatives_fourth_order():
    errs = []
    for N in (32, 64):
        grid = SphericalGrid.circle(N)
        graph = RadialGraph(grid, np.cos(grid.theta))
        d1, d2 = covariant_derivatives(graph)
        e1 = np.max(np.abs(d1 + np.sin(grid.theta)))
        e2 = np.max(np.abs(d2 + np.cos(grid.theta)))
        errs.append(max(e1, e2))
    assert errs[1] < errs[0] / 12.0  # ~16x for a 4th-order stencil
    assert errs[1] < 1e-5


def test_zonal_hessian_matches_closed_form():
    # phi = cos(theta):
    #   H_tt = -cos t,  H_tp = 0,  H_pp = -sin^2 t cos t
    errs = []
    for n_lat in (24, 48):
        graph = sphere2_graph(n_lat, 32, lambda t, p: np.cos(t) + 0.0 * p)
        t = graph.grid.theta[:, None]
        _, hess = covariant_derivatives(graph)
        e = max(
            np.max(np.abs(hess[..., 0, 0] + np.cos(t))),
            np.max(np.abs(hess[..., 0, 1])),
            np.max(np.abs(hess[..., 1, 1] + np.sin(t) ** 2 * np.cos(t))),
        )
        errs.append(e)
    assert errs[1] < errs[0] / 12.0
    assert errs[1] < 1e-5


def test_degree_one_harmonic_hessian():
    # Y = sin t cos p (restriction of x): Hess Y = -Y * round metric
    graph = sphere2_graph(48, 96, lambda t, p: np.sin(t) * np.cos(p))
    t = graph.grid.theta[:, None]
    p = graph.grid.phi_lon[None, :]
    Y = np.sin(t) * np.cos(p)
    _, hess = covariant_derivatives(graph)
    assert_allclose(hess[..., 0, 0], -Y, atol=2e-5)
    assert_allclose(hess[..., 0, 1], 0.0, atol=2e-5)
    assert_allclose(hess[..., 1, 1], -Y * np.sin(t) ** 2, atol=2e-5)


def test_degree_two_harmonic_hessian_mixed_term():
    # Y = sin t cos t sin p (restriction of z*y):
    #   H_tt = -4 sin t cos t sin p
    #   H_tp = -sin^2 t cos p        (nonzero mixed component)
    #   H_pp = -2 sin^3 t cos t sin p
    # trace check: H_tt + H_pp / sin^2 t = -6 Y (degree-2 eigenvalue)
    graph = sphere2_graph(48, 96, lambda t, p: np.sin(t) * np.cos(t) * np.sin(p))
    t = graph.grid.theta[:, None]
    p = graph.grid.phi_lon[None, :]
    st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
    _, hess = covariant_derivatives(graph)
    assert_allclose(hess[..., 0, 0], -4.0 * st * ct * sp, atol=5e-5)
    assert_allclose(hess[..., 0, 1], -(st**2) * cp, atol=5e-5)
    assert_allclose(hess[..., 1, 1], -2.0 * st**3 * ct * sp, atol=5e-5)
    lap = hess[..., 0, 0] + hess[..., 1, 1] / st**2
    assert_allclose(lap, -6.0 * st * ct * sp, atol=5e-4)


# ---------------------------------------------------------------------------
# curvature: round spheres and ellipses


@pytest.mark.parametrize("R", [0.5, 1.0, 1.7])
def test_round_circle_curvature(R):
    field = weingarten(sphere_graph(SphericalGrid.circle(64), R))
    assert_allclose(field.kappa[:, 0], 1.0 / R, rtol=1e-14)
    assert_allclose(field.u, R, rtol=1e-14)
    assert_allclose(field.rho, 1.0)
    # constant phi: only stencil rounding residue survives in the gradient
    assert field.grad_phi_norm().max() < 1e-13


def test_tiny_gradient_survives_rho_rounding():
    # amplitude so small that rho = sqrt(1 + |grad phi|^2) rounds to exactly
    # 1.0 at every node; the reported gradient must still be the true slope,
    # not a reconstruction from rho (which would flush to zero)
    grid = SphericalGrid.circle(256)
    amp = 5e-9
    field = weingarten(RadialGraph(grid, amp * np.cos(grid.theta)))
    assert np.all(field.rho == 1.0)
    assert_allclose(field.grad_phi_norm().max(), amp, rtol=1e-6)


@pytest.mark.parametrize("R", [0.5, 1.0, 1.7])
def test_round_sphere_curvature(R):
    field = weingarten(sphere_graph(SphericalGrid.sphere(32, 64), R))
    assert_allclose(field.kappa, 1.0 / R, rtol=1e-11)
    assert_allclose(field.sigma[..., 0], 2.0 / R, rtol=1e-11)
    assert_allclose(field.sigma[..., 1], 1.0 / R**2, rtol=1e-11)
    assert_allclose(field.u, R, rtol=1e-14)
    # shape operator is (1/R) * identity in the orthonormal frame
    assert_allclose(field.shape_op[..., 0, 0], 1.0 / R, rtol=1e-11)
    assert_allclose(field.shape_op[..., 0, 1], 0.0, atol=1e-12)


def test_round_sphere_embedding_oracle(R=1.3):
    for graph in (
        sphere_graph(SphericalGrid.circle(64), R),
        sphere_graph(SphericalGrid.sphere(32, 64), R),
    ):
        # the oracle differentiates the (non-constant) embedding components, so
        # it carries ordinary O(h^4) truncation error even on a round sphere
        field = embedding_oracle(graph)
        assert_allclose(field.kappa, 1.0 / R, rtol=2e-5)
        assert_allclose(field.u, R, rtol=1e-12)
        assert_allclose(field.r, R, rtol=1e-14)


def ellipse_phi(theta, a, b):
    # polar form of x^2/a^2 + y^2/b^2 = 1
    return -0.5 * np.log(np.cos(theta) ** 2 / a**2 + np.sin(theta) ** 2 / b**2)


def ellipse_kappa(theta, r, a, b):
    s = (a * np.sin(theta) / b) ** 2 + (b * np.cos(theta) / a) ** 2
    return a * b / (r**3 * s**1.5)


@pytest.mark.parametrize("route", [weingarten, embedding_oracle])
def test_ellipse_curvature(route):
    a, b = 2.0, 1.0
    errs = []
    for N in (128, 512):
        grid = SphericalGrid.circle(N)
        graph = RadialGraph(grid, ellipse_phi(grid.theta, a, b))
        field = route(graph)
        exact = ellipse_kappa(grid.theta, field.r, a, b)
        errs.append(np.max(np.abs(field.kappa[:, 0] - exact)))
    assert errs[1] < 5e-3
    assert errs[1] < errs[0] / 40.0  # 4th order: 4^4 = 256x per quadrupling


def test_two_curvature_routes_agree_on_wiggly_graphs():
    graph1 = circle_graph(256, lambda t: 0.1 * np.cos(3 * t) + 0.05 * np.sin(5 * t))
    w, o = weingarten(graph1), embedding_oracle(graph1)
    assert_allclose(w.kappa, o.kappa, atol=5e-5)
    assert_allclose(w.u, o.u, atol=5e-6)

    graph2 = sphere2_graph(
        48, 96, lambda t, p: 0.1 * np.cos(t) ** 2 + 0.05 * np.sin(t) * np.cos(t) * np.sin(p)
    )
    w, o = weingarten(graph2), embedding_oracle(graph2)
    assert_allclose(w.kappa, o.kappa, atol=2e-3)
    assert_allclose(w.sigma, o.sigma, atol=4e-3)


def test_hessian_of_radius_identity():
    # On a curve r(theta): r'' - Gamma r' = g11/r - (u/r)*kappa*g11 - r'^2/r
    # with Gamma = d/dtheta log(r*rho) and g11 = r^2 * rho^2.
    from anisoflow.sphere_geometry import _d1_periodic, _d2_periodic

    a, b = 1.6, 1.0
    errs = []
    for N in (256, 1024):
        grid = SphericalGrid.circle(N)
        graph = RadialGraph(grid, ellipse_phi(grid.theta, a, b))
        field = weingarten(graph)
        r = field.r
        h = grid.h_theta
        rd = _d1_periodic(r, h)
        rdd = _d2_periodic(r, h)
        gamma = _d1_periodic(np.log(r * field.rho), h)
        g11 = r**2 * field.rho**2
        lhs = rdd - gamma * rd
        rhs = g11 / r - (field.u / r) * field.kappa[:, 0] * g11 - rd**2 / r
        errs.append(np.max(np.abs(lhs - rhs)))
    assert errs[1] < 1e-6
    assert errs[1] < errs[0] / 40.0


def test_support_function_bounded_by_radius():
    rng = np.random.default_rng(7)
    graph = circle_graph(128, lambda t: 0.2 * np.cos(2 * t) + 0.1 * np.sin(3 * t))
    f = weingarten(graph)
    assert np.all(f.u <= f.r * (1.0 + 1e-15))
    assert np.all(f.u[f.grad_phi_norm() > 1e-3] < f.r[f.grad_phi_norm() > 1e-3])
    # equality on the sphere
    f = weingarten(sphere_graph(SphericalGrid.sphere(16, 32), 1.1))
    assert_allclose(f.u, f.r, rtol=1e-15)

    graph = sphere2_graph(
        32, 64, lambda t, p: 0.1 * np.sin(t) * np.cos(p) + 0.05 * np.cos(t)
    )
    f = weingarten(graph)
    assert np.all(f.u <= f.r * (1.0 + 1e-15))
    del rng


def test_longitude_shift_equivariance_is_exact():
    # rotating the data by whole grid cells commutes with every stencil bit-for-bit
    graph = sphere2_graph(
        32, 64, lambda t, p: 0.1 * np.sin(t) * np.cos(p) + 0.07 * np.sin(t) ** 2 * np.cos(2 * p)
    )
    shifted = RadialGraph(graph.grid, np.roll(graph.phi, 5, axis=1))
    f0 = weingarten(graph)
    f1 = weingarten(shifted)
    assert np.array_equal(np.roll(f0.kappa, 5, axis=1), f1.kappa)
    assert np.array_equal(np.roll(f0.sigma, 5, axis=1), f1.sigma)
    assert np.array_equal(np.roll(f0.u, 5, axis=1), f1.u)


def test_circle_shift_equivariance_is_exact():
    graph = circle_graph(64, lambda t: 0.2 * np.cos(2 * t))
    shifted = RadialGraph(graph.grid, np.roll(graph.phi, 9))
    f0, f1 = weingarten(graph), weingarten(shifted)
    assert np.array_equal(np.roll(f0.kappa, 9, axis=0), f1.kappa)


def test_singular_metric_detected():
    bad = np.array([[-1.0]])
    with pytest.raises(SingularMetricError):
        _chol_shape_operator(bad, bad, bad, bad, bad, bad)
    one = np.array([[1.0]])
    two = np.array([[2.0]])
    with pytest.raises(SingularMetricError):  # Schur complement 1 - 4 < 0
        _chol_shape_operator(one, two, one, one, one, one)


# ---------------------------------------------------------------------------
# serialization


def test_serialization_roundtrip_bit_exact():
    rng = np.random.default_rng(11)
    g1 = RadialGraph(SphericalGrid.circle(32), rng.normal(0, 0.3, 32))
    g2 = RadialGraph(SphericalGrid.sphere(16, 32), rng.normal(0, 0.3, (16, 32)))
    for g in (g1, g2):
        assert graph_from_text(graph_to_text(g)) == g


def test_serialization_file_roundtrip(tmp_path):
    rng = np.random.default_rng(13)
    g = RadialGraph(SphericalGrid.sphere(16, 32), rng.normal(0, 0.2, (16, 32)))
    path = tmp_path / "graph.csv"
    save_graph(g, path)
    assert load_graph(path) == g


def test_serialization_rejects_malformed_text():
    g = RadialGraph(SphericalGrid.circle(16), np.zeros(16))
    text = graph_to_text(g)
    with pytest.raises(ValueError):
        graph_from_text("")
    with pytest.raises(ValueError, match="header"):
        graph_from_text("n=3 N=16\n0,0\n")
    lines = text.splitlines()
    with pytest.raises(ValueError):  # wrong row count
        graph_from_text("\n".join(lines[:-1]) + "\n")
    broken = list(lines)
    broken[3] = "0.5," + broken[3].split(",")[1]  # node not on the grid
    with pytest.raises(ValueError, match="does not match"):
        graph_from_text("\n".join(broken) + "\n")
    broken = list(lines)
    broken[3] = broken[3] + ",0.0"  # wrong arity
    with pytest.raises(ValueError, match="bad row"):
        graph_from_text("\n".join(broken) + "\n")
