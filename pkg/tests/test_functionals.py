import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subrv import presets
from subrv.bcv import BcvParams
from subrv.functionals import (DEFAULT_L_GRID, DegenerateSamplesError, TwistedBcvSpec, compare,
                               connes_d_integrands, einstein_case_integrand, fiber_decompose,
                               fiber_frame_components, fit_sqrt_limit, kkw_limit_integrand, kkw_referee,
                               observed_rate, wres_constants)
from subrv.jets import constant, coordinates, exp_field
from subrv.quadrature import Box
from subrv.surface import a1_limit, surface_frame
from subrv.twisted import READING_PRINTED, READING_STANDARD

GRID = DEFAULT_L_GRID
B0, Y0 = np.array([0.1, 0.2]), np.array([0.5, 0.7])
x = coordinates(4)


def flat_plane(f=None, params=BcvParams(0.0, 1.0)):
    return TwistedBcvSpec(presets.base_metric("flat"), params, presets.graph_function("plane"),
                          constant(1.0, 4) if f is None else f)


def test_fit_recovers_exact_model():
    fit = fit_sqrt_limit([(L, 3 + 5 / math.sqrt(L)) for L in GRID])
    assert fit.a == pytest.approx(3, abs=1e-12)
    assert fit.b == pytest.approx(5, abs=1e-9)
    assert fit.rate == pytest.approx(-0.5, abs=1e-6)
    assert fit.accepts(3, 1e-10)
    assert not fit.accepts(3.1, 1e-3)


def test_fit_constant_has_no_rate():
    fit = fit_sqrt_limit([(L, 7.0) for L in GRID])
    assert fit.a == pytest.approx(7.0) and fit.rms < 1e-12
    assert math.isnan(fit.rate)
    assert not fit.accepts(7.0, 1e-6)


@pytest.mark.parametrize("samples", [
    [(1e2, 1.0), (1e4, 1.0), (1e6, 1.0)],
    [(1e2, 1.0), (1e3, 1.0), (1e4, 1.0), (1e5, 1.0)],
    [(1e2, 1.0), (1e4, 1.0), (1e3, 1.0), (1e7, 1.0)],
    [(1e2, 1.0), (1e4, 1.0), (1e6, np.nan), (1e8, 1.0)],
    [(-1.0, 1.0), (1e4, 1.0), (1e6, 1.0), (1e8, 1.0)],
])
def test_fit_degenerate_samples(samples):
    with pytest.raises(DegenerateSamplesError):
        fit_sqrt_limit(samples)


def test_observed_rate():
    assert observed_rate([(L, 2 + 3 / L) for L in GRID], 2.0) == pytest.approx(-1.0, abs=1e-9)
    assert observed_rate([(L, 2 + L**-0.5) for L in GRID], 2.0) == pytest.approx(-0.5, abs=1e-9)
    assert math.isnan(observed_rate([(L, 2.0) for L in GRID], 2.0))


def test_sqrt_fit_is_biased_on_inverse_l_data():
    fit = fit_sqrt_limit([(L, -1 + 1 / L) for L in GRID])
    assert abs(fit.a + 1) > 1e-6
    assert fit.rate > -0.5


def test_wres_constants():
    assert wres_constants(2, "KKW") == pytest.approx(math.pi**2 / 3)
    assert wres_constants(2, "dsz") == pytest.approx(4 * math.pi**2 / 3)
    assert wres_constants(1, "KKW") == 0.0
    assert wres_constants(1, "DSZ") == pytest.approx(2 * math.pi / 3)
    for bad in ((0, "KKW"), (1.5, "KKW"), (2, "other")):
        with pytest.raises(ValueError):
            wres_constants(*bad)


def test_spec_validation():
    with pytest.raises(ValueError):
        TwistedBcvSpec(presets.base_metric("flat"), BcvParams(0.0, 1.0), constant(0.0, 3), constant(1.0, 4))
    with pytest.raises(ValueError):
        TwistedBcvSpec(presets.base_metric("flat"), BcvParams(0.0, 1.0), constant(0.0, 2), constant(1.0, 2))
    assert flat_plane().ltilde == 2


@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from([1.0, 7.0, 1e4]))
def test_fiber_decompose_reconstructs_tangent(v1, v2, L):
    spec = TwistedBcvSpec(presets.base_metric("flat"), BcvParams(0.5, 0.8), presets.graph_function("quadratic-graph"),
                          constant(1.0, 4))
    a = fiber_frame_components(spec, [v1, v2], Y0)
    frame = surface_frame(spec.surf.with_L(L), spec.ambient(Y0))
    p1, p2 = fiber_decompose(frame, a, L)
    np.testing.assert_allclose(p1 * frame.e1bar + p2 * frame.e2bar, [a[0], a[1], a[2] * math.sqrt(L)],
                               atol=1e-9 * (1 + math.sqrt(L)))


def test_kkw_untwisted_flat_base():
    spec = flat_plane()
    A1 = a1_limit(spec.surf, spec.ambient(Y0))
    assert A1 == pytest.approx(-2 / (Y0 @ Y0))
    assert kkw_limit_integrand(spec, B0, Y0, "printed") == pytest.approx(A1)
    assert kkw_limit_integrand(spec, B0, Y0, "derived", READING_STANDARD) == pytest.approx(2 * A1)
    assert kkw_limit_integrand(spec, B0, Y0, "derived", READING_PRINTED) == pytest.approx(-2 * A1)
    with pytest.raises(ValueError):
        kkw_limit_integrand(spec, B0, Y0, "other")


def test_einstein_untwisted_flat_base():
    spec = flat_plane()
    A1 = a1_limit(spec.surf, spec.ambient(Y0))
    e = [1.0, 0.0]
    assert einstein_case_integrand(spec, "A", e, e, B0, Y0, "printed") == pytest.approx(-A1 / 2)
    assert einstein_case_integrand(spec, "A", e, e, B0, Y0, "derived", READING_STANDARD) == pytest.approx(-A1)
    assert einstein_case_integrand(spec, "C", e, e, B0, Y0, "derived") == pytest.approx(0.0, abs=1e-14)
    assert einstein_case_integrand(spec, "C", e, e, B0, Y0, "printed") != pytest.approx(0.0, abs=1e-3)
    with pytest.raises(ValueError):
        einstein_case_integrand(spec, "D", e, e, B0, Y0)


def test_einstein_case_b_vanishes_for_warped():
    spec = flat_plane(exp_field(0.3 * x[0] - 0.1 * x[1]))
    for variant in ("printed", "derived"):
        assert einstein_case_integrand(spec, "B", [1.0, 0.5], [0.2, 1.0], B0, Y0, variant) == pytest.approx(0, abs=1e-14)


def test_d_terms_constant_function_vanish():
    spec = flat_plane(exp_field(0.2 * x[0] + 0.1 * x[2]))
    for variant in ("printed", "derived"):
        d = connes_d_integrands(spec, constant(1.0, 4), constant(2.0, 4), x[3] * x[0], B0, Y0, variant)
        for t in d.as_tuple():
            assert t == pytest.approx(0.0, abs=1e-14)


@pytest.fixture(scope="module")
def d_setup():
    spec = flat_plane(exp_field(0.2 * x[0] + 0.1 * x[2]))
    f0, k = 1 + 0.1 * x[1], exp_field(0.2 * x[1])
    g, h = x[2] * x[0], x[3] + x[2] * x[2]
    return spec, f0, k, g, h, [connes_d_integrands(spec, f0, u, k, B0, Y0) for u in (g, h)]


@pytest.mark.parametrize("s, t", [(1.5, -0.4), (-2.0, 0.7)])
def test_d_terms_bilinear(d_setup, s, t):
    spec, f0, k, g, h, (dg, dh) = d_setup
    lhs = connes_d_integrands(spec, f0, s * g + t * h, k, B0, Y0)
    for a, u, v in zip(lhs.as_tuple(), dg.as_tuple(), dh.as_tuple()):
        assert a == pytest.approx(s * u + t * v, abs=1e-10)


def test_compare_requires_check_value():
    with pytest.raises(ValueError):
        compare("x", [(1e2, 1.0), (1e3, 1.0), (1e5, 1.0), (1e7, 1.0)], {"c": 1.0})


def test_comparison_errors_and_monotonicity():
    cmp = compare("x", [(L, 4 * (1 + 1 / L)) for L in GRID], {"good": 4.0, "bad": 6.0})
    assert cmp.rel_err("good") == pytest.approx(1e-6)
    assert cmp.accepts("good") and not cmp.accepts("bad")
    assert cmp.as_dict()["observed_rate"]["good"] == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.slow
def test_kkw_referee_selects_derived_candidate():
    spec = flat_plane()
    cmp = kkw_referee(spec, Box([0, 0], [1, 1], 3), Box([0.5, 0.5], [1.0, 1.0], 6), L_grid=(1e2, 1e4, 1e6, 1e8))
    assert cmp.accepts("derived")
    assert not cmp.accepts("printed")
