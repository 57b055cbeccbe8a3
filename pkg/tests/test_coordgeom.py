import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as o
from subrv.bcv import BcvParams, metric_fields, random_points
from subrv.coordgeom import (CoordinateMetric, NotPositiveDefiniteError, RankDeficientError, christoffel,
                             check_immersion, gauss_curvature_2d, grad_hess_laplacian, graph_chart,
                             induced_surface_metric, omega4_convention_scan, omega4_density, product_metric,
                             riemann_ricci_scalar, scalar_curvature)
from subrv.jets import constant, coordinates, exp_field, sin_field
from subrv.surface import SurfaceDef, gauss_sectional

x4 = coordinates(4)


def test_euclidean_christoffel_and_curvature_vanish():
    g = CoordinateMetric.euclidean(3)
    assert not christoffel(g, [0.1, 0.2, 0.3]).any()
    cur = riemann_ricci_scalar(g, [0.1, 0.2, 0.3])
    assert not cur.riem.any() and cur.scalar == 0.0


def test_polar_type_metric():
    x1, _ = coordinates(2)
    g = CoordinateMetric.diagonal([constant(1.0, 2), x1 * x1])
    G = christoffel(g, [2.0, 0.4])
    assert G[1, 0, 1] == pytest.approx(0.5)
    np.testing.assert_array_equal(G, np.swapaxes(G, -1, -2))
    assert grad_hess_laplacian(g, x1, [2.0, 0.4])[2] == pytest.approx(-0.5)


def test_round_sphere_scalar():
    th, _ = coordinates(2)
    s = sin_field(th)
    g = CoordinateMetric.diagonal([constant(1.0, 2), s * s])
    assert scalar_curvature(g, [0.7, 0.2]) == pytest.approx(2.0, abs=1e-12)
    assert gauss_curvature_2d(g, [1.1, -0.3]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lam,tau,L", [(1.0, 1.0, 2.0), (-0.5, 2.0, 4.0), (0.0, 0.5, 1.0)])
def test_bcv_coordinate_scalar(lam, tau, L, rng):
    p = BcvParams(lam, tau, L)
    pts = random_points(p, 10, rng)
    np.testing.assert_allclose(scalar_curvature(CoordinateMetric(metric_fields(p)), pts), 2 * lam - 2 * tau**2 * L,
                               atol=1e-8)


def test_bcv_scalar_against_frozen(frozen):
    g = CoordinateMetric(metric_fields(BcvParams(1.0, 1.0, 2.0)))
    assert scalar_curvature(g, [0.3, -0.2, 0.5]) == pytest.approx(frozen["bcv_scalar_l1_t1_L2"], abs=1e-8)


def test_flat_hessian_and_laplacian():
    x1, x2, _ = coordinates(3)
    gr, H, lap = grad_hess_laplacian(CoordinateMetric.euclidean(3), x1 * x1, [1.5, 0.0, 2.0])
    np.testing.assert_array_equal(gr, [3.0, 0.0, 0.0])
    np.testing.assert_array_equal(H, np.diag([2.0, 0.0, 0.0]))
    assert lap == -2.0
    assert not grad_hess_laplacian(CoordinateMetric.euclidean(3), 2 * x1 - x2, [0.3, 1.0, 0.0])[1].any()


def test_laplacian_against_difference_oracle():
    b1, b2 = coordinates(2)
    g = CoordinateMetric([[exp_field(0.3 * b1), 0.2 * b1 * b2], [None, 1 + 0.1 * b2 * b2]])
    h = sin_field(b1) * b2 + b1 * b1 * b1
    y = np.array([0.4, -0.3])

    def gn(z):
        return np.array([[np.exp(0.3 * z[0]), 0.2 * z[0] * z[1]], [0.2 * z[0] * z[1], 1 + 0.1 * z[1] ** 2]])
    ref = o.laplacian(gn, lambda z: np.sin(z[0]) * z[1] + z[0] ** 3, y)
    assert grad_hess_laplacian(g, h, y)[2] == pytest.approx(ref, abs=1e-7)


def test_omega4_hand_values(rng):
    g = CoordinateMetric.euclidean(4)
    pts = rng.uniform(-1, 1, (5, 4))
    np.testing.assert_allclose(omega4_density(g, x4[0] * x4[0], x4[0] * x4[0], pts), -6.0, atol=1e-12)
    np.testing.assert_allclose(omega4_density(g, x4[0], x4[1], pts), 0.0, atol=1e-14)
    np.testing.assert_allclose(omega4_density(g, constant(2.0, 4), x4[1] * x4[2], pts), 0.0, atol=1e-14)


def test_product_metric_blocks():
    b = coordinates(2)
    gB = CoordinateMetric.diagonal([exp_field(b[0]), constant(1.0, 2)])
    gF = CoordinateMetric([[constant(1.0, 2), 0.1 * b[0]], [None, constant(2.0, 2)]])
    z = np.array([0.3, -0.2, 0.5, 0.1])
    M = product_metric(gB, gF, constant(1.0, 4)).matrix(z)
    np.testing.assert_allclose(M[:2, :2], gB.matrix(z[:2]))
    np.testing.assert_allclose(M[2:, 2:], gF.matrix(z[2:]))
    assert not M[:2, 2:].any()
    M = product_metric(gB, gF, exp_field(x4[0])).matrix(z)
    np.testing.assert_allclose(M[2:, 2:], np.exp(2 * z[0]) * gF.matrix(z[2:]))
    with pytest.raises(ValueError):
        product_metric(gB, gF, x4[0]).matrix(np.array([-0.5, 0.0, 0.0, 0.0]))


def test_product_metric_positive_definite(rng):
    b = coordinates(2)
    gB = CoordinateMetric.diagonal([exp_field(b[0]), 1 + b[1] * b[1]])
    M = product_metric(gB, CoordinateMetric.euclidean(2), exp_field(0.2 * x4[0] - 0.3 * x4[3]))
    assert np.all(np.linalg.eigvalsh(M.matrix(rng.uniform(-1, 1, (100, 4)))) > 0)


def test_non_positive_metric_rejected():
    b1, _ = coordinates(2)
    g = CoordinateMetric.diagonal([b1, constant(1.0, 2)])
    with pytest.raises(NotPositiveDefiniteError):
        g.matrix([-1.0, 0.0])


def test_flat_plane_induced_metric():
    chart = graph_chart(constant(0.0, 2))
    g = induced_surface_metric(BcvParams(0.0, 1e-9, 1.0), chart)
    np.testing.assert_allclose(g.matrix([0.3, 0.4]), np.eye(2), atol=1e-9)


def test_heisenberg_induced_metric_against_frozen(frozen):
    chart = graph_chart(constant(0.0, 2))
    g = induced_surface_metric(BcvParams(0.0, 1.0, 1.0), chart, [1.0, 1.0])
    ref = np.array(frozen["heisenberg_induced_L1"])
    np.testing.assert_allclose(g.matrix([1.0, 1.0]), ref, atol=1e-10)
    assert np.linalg.det(g.matrix([1.0, 1.0])) == pytest.approx(np.linalg.det(ref), abs=1e-10)


def test_intrinsic_curvature_matches_gauss_sectional():
    y1, y2 = coordinates(2)
    x1, x2, x3 = coordinates(3)
    surf = SurfaceDef(x3 - 0.5 * x1 * x2, BcvParams(1.0, 1.0, 2.0))
    y = np.array([0.4, 0.7])
    K = gauss_curvature_2d(induced_surface_metric(surf.params, graph_chart(0.5 * y1 * y2)), y)
    assert K == pytest.approx(gauss_sectional(surf, [0.4, 0.7, 0.14])[2], abs=1e-8)


def test_rank_deficient_chart():
    y1, _ = coordinates(2)
    with pytest.raises(RankDeficientError):
        check_immersion([y1, 2 * y1, y1 * y1], np.array([0.2, 0.3]))


def _random_metric4(cs):
    return CoordinateMetric([[1 + cs[0] * x4[1] ** 2, cs[1] * x4[2], constant(0.0, 4), cs[2] * x4[0]],
                             [None, exp_field(cs[3] * x4[0]), cs[4] * x4[3], constant(0.0, 4)],
                             [None, None, 1 + cs[5] * x4[0] * x4[0], constant(0.0, 4)],
                             [None, None, None, exp_field(cs[6] * x4[2])]])


coeffs = st.lists(st.floats(-0.3, 0.3), min_size=7, max_size=7)
point4 = st.lists(st.floats(-0.6, 0.6), min_size=4, max_size=4).map(np.array)


@given(coeffs, point4)
def test_riemann_symmetries(cs, x):
    R = riemann_ricci_scalar(_random_metric4(cs), x).riem
    np.testing.assert_allclose(R, -np.swapaxes(R, 0, 1), atol=1e-9)
    np.testing.assert_allclose(R, -np.swapaxes(R, 2, 3), atol=1e-9)
    np.testing.assert_allclose(R, np.transpose(R, (2, 3, 0, 1)), atol=1e-9)
    np.testing.assert_allclose(R + np.einsum("jkil->ijkl", R) + np.einsum("kijl->ijkl", R), 0, atol=1e-9)


@given(coeffs, point4)
def test_scalar_conformal_law(cs, x):
    g = _random_metric4(cs)
    phi = 0.2 * x4[0] * x4[1] + sin_field(0.3 * x4[3])
    S = scalar_curvature(g, x)
    St = scalar_curvature(g.conformal(phi), x)
    gr, _, lap = grad_hess_laplacian(g, phi, x)
    d = phi.eval(x, 1).grad
    expect = np.exp(-2 * phi(x)) * (S + 6 * lap - 6 * gr @ d)
    assert St == pytest.approx(expect, abs=1e-7 * max(1.0, abs(expect)))


def test_omega4_conformally_invariant_only_for_ledger_pairing():
    g = _random_metric4([0.1, -0.2, 0.05, 0.2, 0.1, -0.15, 0.1])
    f1 = sin_field(x4[0] + 0.5 * x4[2]) + x4[1] * x4[3]
    f2 = exp_field(0.3 * x4[3]) + x4[0] * x4[0]
    phis = [0.2 * x4[0], 0.1 * x4[1] * x4[2], sin_field(0.3 * x4[3])]
    pts = np.array([[0.1, 0.2, -0.3, 0.4], [-0.4, 0.3, 0.2, -0.1]])
    scan = omega4_convention_scan(g, phis, f1, f2, pts)
    assert scan[(1, -1)] <= 1e-6
    assert all(v > 1e-3 for k, v in scan.items() if k != (1, -1))
