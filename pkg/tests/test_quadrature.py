import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subrv.bcv import BcvParams
from subrv.jets import constant, coordinates
from subrv.quadrature import Box, Measure, box_rule, integrate_box, integrate_surface_patch
from subrv.surface import CharacteristicPointError, SurfaceDef

x1, x2, x3 = coordinates(3)
y1, y2 = coordinates(2)
PLANE = SurfaceDef(x3, BcvParams(0.0, 1.0))
CHART = [y1, y2, constant(0.0, 2)]


@pytest.mark.parametrize("lo, hi, nodes", [([0, 0], [1, 0], 4), ([1], [0], 4), ([0, 0], [1, 1], 1),
                                           ([0, 0], [1, 1], (3, 3, 3))])
def test_box_validation(lo, hi, nodes):
    with pytest.raises(ValueError):
        Box(lo, hi, nodes)


def test_rule_shape_and_weights():
    pts, w = box_rule(Box([0, -1], [2, 1], (3, 5)))
    assert pts.shape == (15, 2)
    assert w.sum() == pytest.approx(4.0)
    assert Box([0], [1], 3).refined(3).nodes == (9,)


def test_polynomial_exactness():
    box = Box([0, 0], [1, 2], 4)
    assert integrate_box(lambda p: p[:, 0] ** 7 * p[:, 1] ** 3, box) == pytest.approx(1 / 8 * 4, rel=1e-14)


def test_zero_density():
    assert integrate_box(lambda p: np.zeros(len(p)), Box([0, 0], [1, 1], 3)) == 0.0
    assert integrate_box(lambda p: 0.0, Box([0, 0], [1, 1], 3)) == 0.0


def test_non_finite_density():
    with pytest.raises(FloatingPointError):
        integrate_box(lambda p: np.full(len(p), np.inf), Box([0], [1], 3))


def test_limit_patch_against_frozen(frozen):
    box = Box([1, 1], [2, 2], 24)
    got = integrate_surface_patch(PLANE, CHART, box, lambda p: 1.0, Measure.LIMIT)
    assert got == pytest.approx(frozen["quadrature_sqrt_r2"], abs=1e-8)
    finer = integrate_surface_patch(PLANE, CHART, box.refined(2), lambda p: 1.0)
    assert abs(finer - got) < 1e-8


def test_riemannian_measure_grows_with_l():
    box = Box([1, 1], [2, 2], 10)
    areas = [integrate_surface_patch(SurfaceDef(x3, BcvParams(0.0, 1.0, L)), CHART, box, lambda p: 1.0,
                                     Measure.RIEMANNIAN_L) for L in (1e2, 1e4, 1e6)]
    lim = integrate_surface_patch(PLANE, CHART, box, lambda p: 1.0)
    ratios = [a / np.sqrt(L) for a, L in zip(areas, (1e2, 1e4, 1e6))]
    assert all(abs(r - lim) >= abs(s - lim) for r, s in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(lim, rel=1e-4)


def test_characteristic_node_rejected():
    with pytest.raises(CharacteristicPointError):
        integrate_surface_patch(PLANE, CHART, Box([-1, -1], [1, 1], 3), lambda p: 1.0)
    with pytest.raises(ValueError):
        integrate_surface_patch(PLANE, CHART, Box([1], [2], 3), lambda p: 1.0)


bounds = st.tuples(st.floats(0.5, 1.5), st.floats(0.1, 1.0))


@given(bounds, bounds, st.floats(-3, 3), st.floats(-3, 3))
def test_patch_integral_linear_and_positive(bx, by, a, c):
    box = Box([bx[0], by[0]], [bx[0] + bx[1], by[0] + by[1]], 6)

    def f(p):
        return np.cos(p[:, 0]) + p[:, 1] ** 2

    def g(p):
        return 1 + 0 * p[:, 0]
    If, Ig = (integrate_surface_patch(PLANE, CHART, box, h) for h in (f, g))
    both = integrate_surface_patch(PLANE, CHART, box, lambda p: a * f(p) + c * g(p))
    assert both == pytest.approx(a * If + c * Ig, abs=1e-12 * (1 + abs(a * If) + abs(c * Ig)))
    assert Ig > 0
