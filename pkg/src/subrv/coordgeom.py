"""Metric-in-coordinates geometry, the independent referee for closed forms.

A :class:`CoordinateMetric` is a symmetric matrix of scalar fields on one
chart.  Christoffel symbols, curvature, Hessians and the Connes density are
computed from jets of the metric entries; nothing is differenced numerically.

Index layout: ``christoffel(...)[..., k, i, j] = Γ^k_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import conventions as conv
from .jets import Jet, ScalarField, constant, contract, matinv


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class RankDeficientError(ValueError):
    pass


class CoordinateMetric:
    def __init__(self, g: Sequence[Sequence[ScalarField]], name: str = ""):
        n = len(g)
        if any(len(row) != n for row in g):
            raise ValueError("metric must be a square matrix of fields")
        self.dim = n
        # share the upper triangle so g[i][j] is g[j][i]
        self.g = [[g[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
        for row in self.g:
            for e in row:
                if e.dim != self.g[0][0].dim:
                    raise ValueError("metric entries live on different charts")
        self.chart_dim = self.g[0][0].dim
        self.name = name

    def __repr__(self):
        return f"CoordinateMetric(dim={self.dim}{', ' + self.name if self.name else ''})"

    @classmethod
    def euclidean(cls, dim: int) -> "CoordinateMetric":
        return cls.diagonal([constant(1.0, dim)] * dim, name="euclidean")

    @classmethod
    def diagonal(cls, entries: Sequence[ScalarField], name: str = "") -> "CoordinateMetric":
        n = len(entries)
        z = constant(0.0, entries[0].dim)
        return cls([[entries[i] if i == j else z for j in range(n)] for i in range(n)], name)

    def on(self, coords) -> Jet:
        n = self.dim
        cache = {}
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                key = (min(i, j), max(i, j))
                if key not in cache:
                    cache[key] = self.g[key[0]][key[1]].on(coords)
                row.append(cache[key])
            rows.append(Jet.stack(row, -1))
        return Jet.stack(rows, -2)

    def jet(self, point, order: int = 0) -> Jet:
        point = np.asarray(point, dtype=float)
        if point.shape[-1] != self.chart_dim:
            raise ValueError(f"point has dimension {point.shape[-1]}, metric chart has {self.chart_dim}")
        out = self.on(Jet.seed(point, order))
        _check_pd(out.val)
        return out

    def matrix(self, point) -> np.ndarray:
        return self.jet(point, 0).val

    def conformal(self, phi: ScalarField) -> "CoordinateMetric":
        """``e^{2φ} g``."""
        from .jets import exp_field

        w = exp_field(phi * 2.0)
        return CoordinateMetric([[w * e for e in row] for row in self.g], name=f"conformal({self.name})")

    def pullback_fields(self, chartmap: Sequence[ScalarField]) -> "CoordinateMetric":
        """Pullback through a parametrization ``y ↦ chartmap(y)``."""
        k = chartmap[0].dim
        jac = [[c.diff(a) for a in range(k)] for c in chartmap]  # jac[i][a] = ∂_a Φ^i
        gc = [[e.compose(chartmap) for e in row] for row in self.g]
        out = [[None] * k for _ in range(k)]
        n = self.dim
        for a in range(k):
            for b in range(a, k):
                acc = None
                for i in range(n):
                    for j in range(n):
                        t = jac[i][a] * jac[j][b] * gc[i][j]
                        acc = t if acc is None else acc + t
                out[a][b] = out[b][a] = acc
        return CoordinateMetric(out, name=f"pullback({self.name})")


def _check_pd(g: np.ndarray):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("metric is not positive definite at a queried point") from exc


def _christoffel_from(gj: Jet) -> tuple[Jet, Jet]:
    """(g^{-1}, Γ) jets from a metric jet of order o + 1; results have order o."""
    dg = gj.gradient()  # [a, b, c] = ∂_c g_ab
    o = dg.order
    gi = matinv(gj.truncate(o))
    # lower[i, j, l] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    t1 = dg.moveaxis([-3, -2, -1], [-2, -1, -3])  # [i, j, l] -> ∂_i g_jl
    t2 = dg.moveaxis([-3, -2, -1], [-3, -1, -2])  # [i, j, l] -> ∂_j g_il
    lower = (t1 + t2 - dg) * 0.5
    return gi, contract("...kl,...ijl->...kij", gi, lower)


def christoffel(metric: CoordinateMetric, point) -> np.ndarray:
    return _christoffel_from(metric.jet(point, 1))[1].val


@dataclass(frozen=True)
class CoordinateCurvature:
    """``riem[i,j,k,l] = g(R(∂_i,∂_j)∂_k, ∂_l)``, coordinate Ricci and scalar."""

    riem: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    ginv: np.ndarray


def _normalized_chart(gj: Jet):
    """Re-express a metric jet in linear coordinates y = y0 + A z with
    Aᵀ g(y0) A = I.  Returns (jet in z, B = A⁻¹)."""
    c = np.linalg.cholesky(gj.val)
    B = np.swapaxes(c, -1, -2)  # g = Bᵀ B
    A = np.linalg.inv(B)
    val = np.einsum("...ai,...ab,...bj->...ij", A, gj.val, A)
    grad = np.einsum("...ai,...abc,...bj,...ck->...ijk", A, gj.grad, A, A)
    hess = np.einsum("...ai,...abcd,...bj,...ck,...dl->...ijkl", A, gj.hess, A, A, A)
    return Jet(0.5 * (val + np.swapaxes(val, -1, -2)), grad, hess), B


def _riemann_from(gj: Jet) -> CoordinateCurvature:
    """Curvature from an order-2 metric jet.

    The tensors are computed in a chart where the metric is the identity at
    the point and pulled back; this keeps strongly anisotropic metrics (the
    g_L family at large L) free of cancellation between O(L) Christoffel
    symbols.
    """
    zj, B = _normalized_chart(gj.truncate(2))
    cur = _riemann_raw(zj)
    riem = np.einsum("...ai,...bj,...ck,...dl,...abcd->...ijkl", B, B, B, B, cur.riem)
    ricci = np.einsum("...ai,...bj,...ab->...ij", B, B, cur.ricci)
    A = np.linalg.inv(B)
    ginv = np.einsum("...ia,...ab,...jb->...ij", A, cur.ginv, A)
    return CoordinateCurvature(riem, ricci, cur.scalar, ginv)


def _riemann_raw(gj: Jet) -> CoordinateCurvature:
    gi, gam = _christoffel_from(gj)  # order 1
    G = gam.val
    dG = gam.grad  # [l, j, k, i] = ∂_i Γ^l_jk
    # R_ijk^l = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^m_jk Γ^l_im − Γ^m_ik Γ^l_jm
    d = np.einsum("...ljki->...ijkl", dG)
    q = np.einsum("...mjk,...lim->...ijkl", G, G)
    rup = d - np.swapaxes(d, -4, -3) + q - np.swapaxes(q, -4, -3)
    g0 = gj.val
    riem = np.einsum("...ijkm,...ml->...ijkl", rup, g0)
    ricci = conv.RICCI_TRACE_STANDARD * np.einsum("...ajka->...jk", rup)
    scalar = np.einsum("...jk,...jk->...", gi.val, ricci)
    return CoordinateCurvature(riem, ricci, scalar, gi.val)


def riemann_ricci_scalar(metric: CoordinateMetric, point) -> CoordinateCurvature:
    return _riemann_from(metric.jet(point, 2))


def scalar_curvature(metric: CoordinateMetric, point) -> np.ndarray:
    return riemann_ricci_scalar(metric, point).scalar


def gauss_curvature_2d(metric: CoordinateMetric, point) -> np.ndarray:
    if metric.dim != 2:
        raise ValueError("Gauss curvature needs a 2-dimensional metric")
    return 0.5 * scalar_curvature(metric, point)


def _ghl(gi: np.ndarray, gam: np.ndarray, hj: Jet):
    dh = hj.grad
    grad = np.einsum("...ij,...j->...i", gi, dh)
    hess = hj.hess - np.einsum("...kij,...k->...ij", gam, dh)
    lap = conv.LAPLACIAN_SIGN * np.einsum("...ij,...ij->...", gi, hess)
    return grad, hess, lap


def grad_hess_laplacian(metric: CoordinateMetric, h: ScalarField, point):
    """``(g^{ij}∂_j h, ∇dh, Δh)`` with the positive Laplacian Δ = −tr_g ∇dh."""
    if h.dim != metric.chart_dim:
        raise ValueError("function and metric live on different charts")
    gi, gam = _christoffel_from(metric.jet(point, 1))
    return _ghl(gi.val, gam.val, h.eval(point, 2))


def laplacian(metric: CoordinateMetric, h: ScalarField, point) -> np.ndarray:
    return grad_hess_laplacian(metric, h, point)[2]


def covector_derivative(metric: CoordinateMetric, a: np.ndarray, w: Jet, point) -> np.ndarray:
    """``(∇_A w)_k = A^i (∂_i w_k − Γ^j_ik w_j)`` for a covector jet ``w`` (order ≥ 1)."""
    gam = christoffel(metric, point)
    return np.einsum("...i,...ki->...k", a, w.grad) - np.einsum("...i,...jik,...j->...k", a, gam, w.val)


def vector_derivative(metric: CoordinateMetric, a: np.ndarray, v: Jet, point) -> np.ndarray:
    """``(∇_A V)^k = A^i (∂_i V^k + Γ^k_ij V^j)``."""
    gam = christoffel(metric, point)
    return np.einsum("...i,...ki->...k", a, v.grad) + np.einsum("...i,...kij,...j->...k", a, gam, v.val)


def omega4_terms(metric: CoordinateMetric, f1: ScalarField, f2: ScalarField, point,
                 r_sign: int = conv.OMEGA4_R_SIGN, lap_sign: int = conv.OMEGA4_LAPLACIAN_SIGN):
    """The four bracketed terms of the Connes density and √det g.

    ``r_sign`` multiplies the standard scalar curvature; ``lap_sign`` is the
    sign in Δ = lap_sign · tr_g ∇d.
    """
    if metric.dim != 4:
        raise ValueError(f"the Connes density is defined here for dim 4, got {metric.dim}")
    for f in (f1, f2):
        if f.dim != metric.chart_dim:
            raise ValueError("function and metric live on different charts")
    gj = metric.jet(point, 2)
    curv = _riemann_from(gj)
    gi2, gam1 = _christoffel_from(gj)  # ginv order 1, gamma order 1
    gi_full = matinv(gj)  # order 2
    gi, gam = gi_full.val, gam1.val
    a = f1.eval(point, 3)
    b = f2.eval(point, 3)
    # s = g^{ij} ∂_i f1 ∂_j f2 as an order-2 jet
    s = contract("...ij,...i->...j", gi_full, a.gradient())
    s = (s * b.gradient()).sum(-1)
    _, hs, _ = _ghl(gi, gam, s)
    _, h1, _ = _ghl(gi, gam, a)
    _, h2, _ = _ghl(gi, gam, b)
    lap = lambda h: lap_sign * np.einsum("...ij,...ij->...", gi, h)  # noqa: E731
    t1 = r_sign * curv.scalar * s.val / 3.0
    t2 = lap(hs)
    t3 = np.einsum("...ik,...jl,...ij,...kl->...", gi, gi, h1, h2)
    t4 = -0.5 * lap(h1) * lap(h2)
    vol = np.sqrt(np.linalg.det(gj.val))
    return (t1, t2, t3, t4), vol


def omega4_density(metric: CoordinateMetric, f1: ScalarField, f2: ScalarField, point, **kw) -> np.ndarray:
    """Connes density against coordinate volume: [r/3<df1,df2> + Δ<df1,df2> + <∇df1,∇df2> − ½Δf1Δf2]√det g."""
    (t1, t2, t3, t4), vol = omega4_terms(metric, f1, f2, point, **kw)
    return (t1 + t2 + t3 + t4) * vol


def omega4_convention_scan(metric: CoordinateMetric, phis: Sequence[ScalarField], f1, f2, point) -> dict:
    """Relative conformal-invariance residual for each (r_sign, lap_sign) pairing."""
    out = {}
    for r_sign in (+1, -1):
        for lap_sign in (-1, +1):
            base = omega4_density(metric, f1, f2, point, r_sign=r_sign, lap_sign=lap_sign)
            worst = 0.0
            for phi in phis:
                other = omega4_density(metric.conformal(phi), f1, f2, point, r_sign=r_sign, lap_sign=lap_sign)
                scale = np.maximum(np.abs(base), 1e-300)
                worst = max(worst, float(np.max(np.abs(other - base) / scale)))
            out[(r_sign, lap_sign)] = worst
    return out


def product_metric(gB: CoordinateMetric, gF: CoordinateMetric, f: ScalarField) -> CoordinateMetric:
    """Block metric g_B ⊕ f² g_F on the (m + n)-chart (base coordinates first)."""
    m, n = gB.dim, gF.dim
    if f.dim != m + n:
        raise ValueError(f"twisting function must live on the {m + n}-chart")
    N = m + n
    base = list(range(m))
    fib = list(range(m, N))
    z = constant(0.0, N)
    f2 = f * f
    g = [[z] * N for _ in range(N)]
    for i in range(m):
        for j in range(i, m):
            g[i][j] = gB.g[i][j].extend(N, base)
    for i in range(n):
        for j in range(i, n):
            g[m + i][m + j] = f2 * gF.g[i][j].extend(N, fib)
    return _PositiveTwisting(g, f, name="product")


class _PositiveTwisting(CoordinateMetric):
    def __init__(self, g, f, name=""):
        super().__init__(g, name)
        self.f = f

    def jet(self, point, order: int = 0) -> Jet:
        fv = self.f(np.asarray(point, dtype=float))
        if np.any(fv <= 0):
            raise ValueError("twisting function must be positive at every queried point")
        return super().jet(point, order)


def induced_surface_metric(params, chartmap: Sequence[ScalarField], point2=None) -> CoordinateMetric:
    """Pullback of g_L through a parametrization ``(y1, y2) ↦ (x1, x2, x3)``."""
    from .bcv import metric_fields

    if len(chartmap) != 3 or any(c.dim != 2 for c in chartmap):
        raise ValueError("chart map must be three fields on a 2-chart")
    g3 = CoordinateMetric(metric_fields(params), name="bcv")
    out = g3.pullback_fields(chartmap)
    if point2 is not None:
        check_immersion(chartmap, point2)
    return out


def check_immersion(chartmap, point2, tol: float = 1e-10):
    jac = np.stack([c.eval(point2, 1).grad for c in chartmap], -2)  # [..., i, a]
    sv = np.linalg.svd(jac, compute_uv=False)
    if np.any(sv[..., -1] <= tol * np.maximum(sv[..., 0], 1.0)):
        raise RankDeficientError("chart map Jacobian is rank deficient")
    return jac


def graph_chart(phi: ScalarField) -> list[ScalarField]:
    """``(y1, y2) ↦ (y1, y2, φ(y))``."""
    from .jets import coordinate

    return [coordinate(0, 2), coordinate(1, 2), phi]


def gram_schmidt_frame(metric: CoordinateMetric, order: Sequence[int] | None = None):
    """Orthonormal frame from the coordinate basis, processed in ``order``.

    The k-th frame field is built from ∂_{order[k]}; the frame is returned in
    processing order.
    """
    from .frames import OrthonormalFrame
    from .jets import VectorField, sqrt_field

    n, d = metric.dim, metric.chart_dim
    if n != d:
        raise ValueError("Gram-Schmidt frames need a metric on its own chart")
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the coordinate indices")
    zero, one = constant(0.0, d), constant(1.0, d)

    def inner(u, v):
        acc = None
        for i in range(n):
            for j in range(n):
                if u[i] is zero or v[j] is zero:
                    continue
                t = u[i] * v[j] * metric.g[i][j]
                acc = t if acc is None else acc + t
        return acc if acc is not None else zero

    frame = []
    for k in order:
        v = [one if i == k else zero for i in range(n)]
        for e in frame:
            c = inner(v, e)
            v = [vi - c * ei if ei is not zero else vi for vi, ei in zip(v, e)]
        norm = sqrt_field(inner(v, v))
        frame.append([vi / norm if vi is not zero else zero for vi in v])
    return OrthonormalFrame([VectorField(e) for e in frame], name="gram-schmidt")
