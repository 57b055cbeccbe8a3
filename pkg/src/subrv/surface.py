"""Surfaces Σ = {u = 0} in a BCV space: adapted frames, II^L, curvatures, limits.

Frame components are taken in the orthonormal frame (X1, X2, X̃3) of g_L
unless stated otherwise.  Coordinate components are on the (x1, x2, x3)
chart.  Every quantity is evaluated pointwise and is batched over leading
axes of ``point``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import conventions as conv
from .bcv import (BcvParams, bcv_curvature_closed, bcv_frame, check_domain, coframe, frame_matrix,
                  metric_matrix)
from .coordgeom import check_immersion, induced_surface_metric
from .frames import koszul_connection
from .jets import Jet, ScalarField, derivative, sqrt


class CharacteristicPointError(ValueError):
    """The horizontal gradient vanishes (l < tol) at a queried point."""


@dataclass(frozen=True)
class SurfaceDef:
    u: ScalarField
    params: BcvParams
    name: str = ""

    def __post_init__(self):
        if self.u.dim != 3:
            raise ValueError("the defining function lives on the 3-chart")

    def with_L(self, L: float) -> "SurfaceDef":
        return SurfaceDef(self.u, self.params.with_L(L), self.name)


@dataclass(frozen=True)
class SurfaceFrame:
    """Adapted quantities at a point; vectors are stored in (X1, X2, X̃3) components."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    l: np.ndarray
    lL: np.ndarray
    pbar: np.ndarray
    qbar: np.ndarray
    pbarL: np.ndarray
    qbarL: np.ndarray
    rbarL: np.ndarray
    vL: np.ndarray
    e1bar: np.ndarray
    e2bar: np.ndarray
    coords_matrix: np.ndarray  # A[a, i]: coordinate components of X1, X2, X̃3

    def coordinate(self, v: np.ndarray) -> np.ndarray:
        """Coordinate components of a vector given in frame components."""
        return np.einsum("...a,...ai->...i", v, self.coords_matrix)


class _Jets:
    """Order-k jets of the adapted quantities (u is evaluated at order k + 1)."""

    def __init__(self, surf: SurfaceDef, point, order: int = 1, tol: float = conv.CHARACTERISTIC_TOL):
        params = surf.params
        x = check_domain(params, point)
        self.x, self.params = x, params
        coords = Jet.seed(x, order + 1)
        u = surf.u.on(coords)
        A = _frame_jet(params, coords)  # rows X1, X2, X̃3 (unnormalized X3 scaled by L^{-1/2})
        self.A = A.val
        self.Ajet = A
        self.u = u
        self.p = derivative(A[..., 0, :], u)
        self.q = derivative(A[..., 1, :], u)
        self.r = derivative(A[..., 2, :], u)
        self.X3u = self.r * np.sqrt(params.L)
        l2 = self.p * self.p + self.q * self.q
        if np.any(np.sqrt(l2.val) < tol):
            raise CharacteristicPointError(
                f"characteristic point: |∇_H u| = {np.min(np.sqrt(l2.val)):.3g} < {tol:g}")
        self.l = sqrt(l2)
        self.lL = sqrt(l2 + self.r * self.r)
        il, ilL = self.l.reciprocal(), self.lL.reciprocal()
        self.pbar, self.qbar = self.p * il, self.q * il
        self.pbarL, self.qbarL, self.rbarL = self.p * ilL, self.q * ilL, self.r * ilL

    def X(self, a: int, h: Jet) -> np.ndarray:
        """Value of E_a(h) for E = (X1, X2, X̃3)."""
        return np.einsum("...x,...x->...", self.A[..., a, :], h.grad)

    def frame(self) -> SurfaceFrame:
        v = lambda j: j.val  # noqa: E731
        pb, qb, rL = v(self.pbar), v(self.qbar), v(self.rbarL)
        z = np.zeros_like(pb)
        vL = np.stack([v(self.pbarL), v(self.qbarL), rL], -1)
        e1 = np.stack([qb, -pb, z], -1)
        e2 = np.stack([rL * pb, rL * qb, -v(self.l) / v(self.lL)], -1)
        return SurfaceFrame(v(self.p), v(self.q), v(self.r), v(self.l), v(self.lL), pb, qb,
                            v(self.pbarL), v(self.qbarL), rL, vL, e1, e2, self.A)


def _frame_jet(params: BcvParams, coords) -> Jet:
    return bcv_frame(params).matrix_on(coords)


def horizontal_gradient(surf: SurfaceDef, point):
    """``(p, q, ∇_H u)`` with ∇_H u = p X1 + q X2 in coordinate components."""
    params = surf.params
    x = check_domain(params, point)
    coords = Jet.seed(x, 1)
    u = surf.u.on(coords)
    A = frame_matrix(params, x)
    p = np.einsum("...x,...x->...", A[..., 0, :], u.grad)
    q = np.einsum("...x,...x->...", A[..., 1, :], u.grad)
    vec = p[..., None] * A[..., 0, :] + q[..., None] * A[..., 1, :]
    return p, q, vec


def is_characteristic(surf: SurfaceDef, point, tol: float = conv.CHARACTERISTIC_TOL):
    if not tol > 0:
        raise ValueError("tol must be > 0")
    p, q, _ = horizontal_gradient(surf, point)
    return np.hypot(p, q) < tol


def surface_frame(surf: SurfaceDef, point, tol: float = conv.CHARACTERISTIC_TOL) -> SurfaceFrame:
    return _Jets(surf, point, 0, tol).frame()


@dataclass(frozen=True)
class SecondFundamentalForm:
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray

    @property
    def h21(self):
        return self.h12

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([np.stack([self.h11, self.h12], -1), np.stack([self.h12, self.h22], -1)], -2)

    @property
    def det(self):
        return self.h11 * self.h22 - self.h12**2

    @property
    def trace(self):
        return self.h11 + self.h22


def _hinner(J: _Jets, e: np.ndarray, h: Jet):
    """<e, ∇_H h> for a vector e in frame components."""
    return e[..., 0] * J.X(0, h) + e[..., 1] * J.X(1, h)


def second_fundamental_form(surf: SurfaceDef, point, variant: str = "derived",
                            tol: float = conv.CHARACTERISTIC_TOL) -> SecondFundamentalForm:
    """II^L from the closed-form entries.

    ``variant="printed"`` evaluates the three displayed formulas literally.
    ``variant="derived"`` drops the λ-term at the end of h22: the connection
    contribution it stands for is proportional to p̄_L q̄ − q̄_L p̄ = 0.  The
    two variants agree when λ = 0.
    """
    if variant not in ("printed", "derived"):
        raise ValueError(f"unknown variant {variant!r}")
    J = _Jets(surf, point, 1, tol)
    fr = J.frame()
    lam, tau, L = surf.params.lam, surf.params.tau, surf.params.L
    x1, x2 = J.x[..., 0], J.x[..., 1]
    l, lL = fr.l, fr.lL
    h11 = l / lL * (J.X(0, J.pbar) + J.X(1, J.qbar)) - lam / 2 * (fr.pbarL * x1 + fr.qbarL * x2)
    h12 = -lL / l * _hinner(J, fr.e1bar, J.rbarL) - tau * np.sqrt(L)
    r_over_l = J.r * J.l.reciprocal()
    h22 = -(l**2) / lL**2 * _hinner(J, fr.e2bar, r_over_l) + J.X(2, J.rbarL)
    if variant == "printed":
        h22 = h22 + (fr.pbarL - fr.qbarL) * fr.pbar * fr.qbar * fr.rbarL**2 * lam / 2 * x2
    return SecondFundamentalForm(h11, h12, h22)


def second_fundamental_form_oracle(surf: SurfaceDef, point, tol: float = conv.CHARACTERISTIC_TOL) -> SecondFundamentalForm:
    """<∇^L_{ē_i} v_L, ē_j> from the Koszul connection of the BCV frame."""
    J = _Jets(surf, point, 1, tol)
    fr = J.frame()
    gamma = koszul_connection(bcv_frame(surf.params), J.x).gamma
    vjets = [J.pbarL, J.qbarL, J.rbarL]
    # D[b, c] = E_b(v^c)
    D = np.stack([np.stack([J.X(b, vjets[c]) for c in range(3)], -1) for b in range(3)], -2)

    def entry(ei, ej):
        dv = np.einsum("...b,...bc->...c", ei, D) + np.einsum("...b,...a,...bac->...c", ei, fr.vL, gamma)
        return np.einsum("...c,...c->...", dv, ej)

    h11 = entry(fr.e1bar, fr.e1bar)
    h12 = entry(fr.e1bar, fr.e2bar)
    h21 = entry(fr.e2bar, fr.e1bar)
    h22 = entry(fr.e2bar, fr.e2bar)
    return SecondFundamentalForm(h11, 0.5 * (h12 + h21), h22)


def mean_curvatures(surf: SurfaceDef, point, variant: str = "derived", tol: float = conv.CHARACTERISTIC_TOL):
    """``(H_L, H_inf)``."""
    H_L = second_fundamental_form(surf, point, variant, tol).trace
    J = _Jets(surf, point, 1, tol)
    x1, x2 = J.x[..., 0], J.x[..., 1]
    lam = surf.params.lam
    H_inf = J.X(0, J.pbar) + J.X(1, J.qbar) - lam / 2 * (J.pbar.val * x1 + J.qbar.val * x2)
    return H_L, H_inf


def ambient_sectional(surf: SurfaceDef, point, tol: float = conv.CHARACTERISTIC_TOL):
    fr = surface_frame(surf, point, tol)
    riem = bcv_curvature_closed(surf.params, point).riem
    return conv.SECTIONAL_SIGN * np.einsum("...abcd,...a,...b,...c,...d->...", riem,
                                           fr.e1bar, fr.e2bar, fr.e1bar, fr.e2bar)


def gauss_sectional(surf: SurfaceDef, point, variant: str = "derived", tol: float = conv.CHARACTERISTIC_TOL):
    """``(K_ambient, det II^L, K_sigma)`` with K_sigma = K_ambient + det II^L."""
    K = ambient_sectional(surf, point, tol)
    d = second_fundamental_form(surf, point, variant, tol).det
    return K, d, K + d


def intrinsic_curvature(surf: SurfaceDef, chartmap: Sequence[ScalarField], point2):
    """Gauss curvature of the pulled-back metric, the referee for ``gauss_sectional``."""
    from .coordgeom import gauss_curvature_2d

    return gauss_curvature_2d(induced_surface_metric(surf.params, chartmap, point2), point2)


def a1_limit(surf: SurfaceDef, point, variant: str = "derived", tol: float = conv.CHARACTERISTIC_TOL):
    """The closed-form limit of the surface sectional curvature.

    ``"printed"`` includes the explicit term λτ q̄ X3u / l; ``"derived"``
    omits it (λ still enters through X1, X2).  They agree when λ = 0.
    """
    if variant not in ("printed", "derived"):
        raise ValueError(f"unknown variant {variant!r}")
    J = _Jets(surf, point, 1, tol)
    lam, tau = surf.params.lam, surf.params.tau
    w = J.X3u * J.l.reciprocal()
    pb, qb = J.pbar.val, J.qbar.val
    e1_dot = qb * J.X(0, w) - pb * J.X(1, w)
    X3u, l = J.X3u.val, J.l.val
    out = -2 * tau * e1_dot - 4 * tau**2 * X3u**2 / l**2
    if variant == "printed":
        out = out + lam * tau * qb * X3u / l
    return out


def jl_rotate(frame: SurfaceFrame, v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """J_L on a tangent vector given in frame components."""
    a = np.einsum("...a,...a->...", v, frame.e1bar)
    b = np.einsum("...a,...a->...", v, frame.e2bar)
    resid = v - a[..., None] * frame.e1bar - b[..., None] * frame.e2bar
    scale = np.maximum(1.0, np.linalg.norm(v, axis=-1))
    if np.any(np.linalg.norm(resid, axis=-1) > tol * scale):
        raise ValueError("vector is not tangent to the surface")
    return a[..., None] * frame.e2bar - b[..., None] * frame.e1bar


def surface_measure_density(surf: SurfaceDef, chartmap: Sequence[ScalarField], point2, L_or_limit="limit",
                            tol: float = conv.CHARACTERISTIC_TOL):
    """Area density in the parameter chart.

    A finite ``L_or_limit`` gives the Riemannian density √det of the induced
    metric for g_L.  ``"limit"`` gives |p̄ ω2∧ω3 − q̄ ω1∧ω3| pulled back.
    """
    point2 = np.asarray(point2, dtype=float)
    jac = check_immersion(chartmap, point2)  # [..., i, a]
    x = np.stack([c(point2) for c in chartmap], -1)
    if isinstance(L_or_limit, str):
        if L_or_limit != "limit":
            raise ValueError("L_or_limit must be a positive number or 'limit'")
        fr = surface_frame(surf, x, tol)
        w = np.einsum("...ki,...ia->...ka", coframe(surf.params, x), jac)  # ω_k(∂_a)

        def wedge(i, j):
            return w[..., i, 0] * w[..., j, 1] - w[..., i, 1] * w[..., j, 0]

        return np.abs(fr.pbar * wedge(1, 2) - fr.qbar * wedge(0, 2))
    params = surf.params.with_L(float(L_or_limit))
    g = np.einsum("...ia,...ij,...jb->...ab", jac, metric_matrix(params, x), jac)
    return np.sqrt(np.linalg.det(g))
