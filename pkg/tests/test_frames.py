import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subrv.bcv import BcvParams, bcv_curvature_closed, bcv_frame, random_points
from subrv.coordgeom import CoordinateMetric, gauss_curvature_2d
from subrv.frames import (OrthonormalFrame, SingularFrameError, frame_curvature, koszul_connection, sectional,
                          structure_coefficients)
from subrv.jets import VectorField, constant, coordinates

P = np.array([0.3, -0.2, 0.5])
lams = st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0])
taus = st.sampled_from([0.5, 1.0, 2.0])
Ls = st.sampled_from([1.0, 2.0, 4.0])


def coordinate_frame(d=3):
    return OrthonormalFrame([VectorField([1.0 if i == a else 0.0 for i in range(d)]) for a in range(d)])


def test_coordinate_frame_is_flat():
    F = coordinate_frame()
    assert not structure_coefficients(F, P).any()
    assert not koszul_connection(F, P).gamma.any()
    curv = frame_curvature(F, P)
    assert not curv.riem.any()
    assert sectional(curv, 0, 1) == 0.0


def test_heisenberg_bracket_is_vertical():
    c = structure_coefficients(bcv_frame(BcvParams(0.0, 1.0, 1.0)), P)
    np.testing.assert_allclose(c[0, 1], [0.0, 0.0, 2.0], atol=1e-14)


def test_bracket_against_frozen(frozen):
    c = structure_coefficients(bcv_frame(BcvParams(1.0, 1.0, 2.0)), P)
    np.testing.assert_allclose(c, frozen["bcv_structure_l1_t1_L2"], atol=1e-10)
    # [X1, X2] = −λ/2 x2 X1 + λ/2 x1 X2 + 2τ X3 with X3 = √L X̃3
    np.testing.assert_allclose(c[0, 1], [0.1, 0.15, 2 * np.sqrt(2)], atol=1e-12)


def test_heisenberg_connection_entry():
    g = koszul_connection(bcv_frame(BcvParams(0.0, 1.0, 1.0)), P).gamma
    assert g[0, 1, 2] == pytest.approx(1.0)


def test_connection_against_frozen(frozen):
    g = koszul_connection(bcv_frame(BcvParams(1.0, 1.0, 2.0)), P).gamma
    np.testing.assert_allclose(g, frozen["bcv_connection_l1_t1_L2"], atol=1e-9)


def test_curvature_hand_values():
    curv = frame_curvature(bcv_frame(BcvParams(1.0, 1.0, 2.0)), P)
    # <R(X1, X̃3)X̃3, X1> = τ²L
    assert curv.riem[0, 2, 2, 0] == pytest.approx(2.0, abs=1e-10)
    assert sectional(curv, 0, 2) == pytest.approx(2.0, abs=1e-10)
    assert sectional(curv, 0, 1) == pytest.approx(-5.0, abs=1e-10)
    assert curv.scalar == pytest.approx(-2.0, abs=1e-10)


def test_curvature_scalar_against_frozen(frozen):
    curv = frame_curvature(bcv_frame(BcvParams(1.0, 1.0, 2.0)), P)
    assert curv.scalar == pytest.approx(frozen["bcv_scalar_l1_t1_L2"], abs=1e-8)


def test_sectional_on_flat_plane_section():
    E = coordinate_frame()
    assert sectional(frame_curvature(E, P), 0, 1) == gauss_curvature_2d(CoordinateMetric.euclidean(2), P[:2])
    with pytest.raises(ValueError):
        sectional(frame_curvature(E, P), 1, 1)


def test_degenerate_frame_rejected():
    x1 = coordinates(2)[0]
    F = OrthonormalFrame([VectorField([x1, constant(0.0, 2)]), VectorField([constant(0.0, 2), constant(1.0, 2)])])
    with pytest.raises(SingularFrameError):
        structure_coefficients(F, np.array([0.0, 0.3]))


def test_frame_shape_validation():
    with pytest.raises(ValueError):
        OrthonormalFrame([VectorField([1.0, 0.0, 0.0])])


@given(lams, taus, Ls, st.integers(0, 2**31))
def test_connection_and_curvature_identities(lam, tau, L, seed):
    p = BcvParams(lam, tau, L)
    pts = random_points(p, 20, np.random.default_rng(seed))
    F = bcv_frame(p)
    g = koszul_connection(F, pts).gamma
    c = structure_coefficients(F, pts)
    np.testing.assert_allclose(g + np.swapaxes(g, -1, -2), 0, atol=1e-12)
    np.testing.assert_allclose(g - np.swapaxes(g, -3, -2), c, atol=1e-10)
    R = frame_curvature(F, pts).riem
    np.testing.assert_allclose(R, -np.swapaxes(R, -4, -3), atol=1e-9)
    np.testing.assert_allclose(R, -np.swapaxes(R, -2, -1), atol=1e-9)
    np.testing.assert_allclose(R, np.moveaxis(R, (-4, -3), (-2, -1)), atol=1e-9)
    bianchi = R + np.einsum("...jkil->...ijkl", R) + np.einsum("...kijl->...ijkl", R)
    np.testing.assert_allclose(bianchi, 0, atol=1e-9)
    curv = frame_curvature(F, pts)
    np.testing.assert_allclose(curv.scalar, np.einsum("...kk->...", curv.ricci), atol=1e-12)


@pytest.mark.parametrize("lam", [-1.0, 0.0, 1.0])
@pytest.mark.parametrize("tau", [0.5, 1.0])
@pytest.mark.parametrize("L", [1.0, 4.0])
def test_frame_curvature_matches_closed_table(lam, tau, L):
    p = BcvParams(lam, tau, L)
    pts = random_points(p, 100, np.random.default_rng(7))
    np.testing.assert_allclose(frame_curvature(bcv_frame(p), pts).riem, bcv_curvature_closed(p, pts).riem,
                               atol=1e-9)
