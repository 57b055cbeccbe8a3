"""Closed-form geometry of twisted products B ×_f F with metric g_B ⊕ f² g_F.

Charts: the product chart has the m base coordinates first, then the n fiber
coordinates.  Vector fields are given by coordinate coefficients on the
product chart and tagged BASE or FIBER; they are assumed to be lifts (base
fields do not depend on fiber coordinates and vice versa), which is checked.

Conventions.  Results are reported in the package conventions (standard
Ricci trace, positive Laplacian).  The printed Ricci and scalar formulas are
evaluated in a *reading*: a Ricci trace sign together with a sign for the
base Laplacian Δ_B.  ``READING_PRINTED`` is the reading under which the
printed formulas match the coordinate oracle; ``arbitrate_ltilde`` re-derives
that choice.

Fiber curvature.  When f depends on fiber coordinates, Ric^F and S^F are
taken from the leaf metric f² g_F at the current base point, with
S^F := f² · S(leaf) so that S^F / f² is the leaf scalar curvature.  For a
base-only f these are the curvatures of g_F itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coordgeom import (CoordinateMetric, _christoffel_from, _riemann_from, christoffel,
                        product_metric)
from .jets import Jet, ScalarField, VectorField, contract, log_field


class TangentClass(str, enum.Enum):
    BASE = "BASE"
    FIBER = "FIBER"
    MIXED = "MIXED"


class MixedTangentError(ValueError):
    pass


class NotALiftError(ValueError):
    pass


@dataclass(frozen=True)
class Reading:
    """How the printed Ricci/scalar formulas are read.

    ricci_sign: +1 for the standard trace, −1 for the alternative trace.
    base_laplacian_sign: Δ_B = base_laplacian_sign · tr Hess_B.
    """

    ricci_sign: int
    base_laplacian_sign: int
    name: str = ""


READING_STANDARD = Reading(+1, -1, "standard-ricci/positive-laplacian")
READING_ALT = Reading(-1, +1, "alternative-trace/trace-laplacian")
READING_PRINTED = READING_ALT


@dataclass
class TwistedProductSpec:
    m: int
    n: int
    gB: CoordinateMetric
    gF: CoordinateMetric
    f: ScalarField
    ltilde: int | None = None
    name: str = ""
    _metric: CoordinateMetric | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.gB.dim != self.m or self.gB.chart_dim != self.m:
            raise ValueError("base metric must be an m×m metric on the m-chart")
        if self.gF.dim != self.n or self.gF.chart_dim != self.n:
            raise ValueError("fiber metric must be an n×n metric on the n-chart")
        if self.f.dim != self.m + self.n:
            raise ValueError("twisting function must live on the (m+n)-chart")
        if self.ltilde is None:
            self.ltilde = self.n

    @property
    def dim(self) -> int:
        return self.m + self.n

    @property
    def metric(self) -> CoordinateMetric:
        if self._metric is None:
            self._metric = product_metric(self.gB, self.gF, self.f)
        return self._metric

    def with_ltilde(self, lt: int) -> "TwistedProductSpec":
        return TwistedProductSpec(self.m, self.n, self.gB, self.gF, self.f, lt, self.name, self._metric)


@dataclass(frozen=True)
class Tangent:
    field: VectorField
    tag: TangentClass


def classify(spec: TwistedProductSpec, v, point, tol: float = 0.0) -> Tangent:
    """Tag a vector field as BASE or FIBER from its components at ``point``."""
    if isinstance(v, Tangent):
        return v
    comps = v.eval(point, 0).val
    base_zero = np.all(np.abs(comps[..., : spec.m]) <= tol)
    fib_zero = np.all(np.abs(comps[..., spec.m:]) <= tol)
    if fib_zero:
        return Tangent(v, TangentClass.BASE)
    if base_zero:
        return Tangent(v, TangentClass.FIBER)
    return Tangent(v, TangentClass.MIXED)


def freeze(h: ScalarField, fixed_slots: Sequence[int], values: np.ndarray, free_slots: Sequence[int]) -> ScalarField:
    """Restrict ``h`` to the free slots, holding the fixed slots at ``values``."""
    N = h.dim
    values = np.asarray(values, dtype=float)

    def build(coords):
        c0 = coords[0]
        full = [None] * N
        for k, s in enumerate(free_slots):
            full[s] = coords[k]
        for k, s in enumerate(fixed_slots):
            v = np.broadcast_to(values[..., k], c0.shape)
            full[s] = Jet.constant(v, c0.dim, c0.order) if c0.order else Jet(v.copy())
        return h.on(full)

    return ScalarField(len(free_slots), build, "frozen")


class _Point:
    """Everything the closed forms need at a (batch of) point(s)."""

    def __init__(self, spec: TwistedProductSpec, point):
        self.spec = spec
        x = np.asarray(point, dtype=float)
        self.x = x
        m, n = spec.m, spec.n
        self.m, self.n = m, n
        fj = spec.f.eval(x, 3)
        if np.any(fj.val <= 0):
            raise ValueError("twisting function must be positive")
        self.fj = fj
        self.fv = fj.val
        self.df = fj.grad
        self.ddf = fj.hess
        gBj = spec.gB.jet(x[..., :m], 2)
        gi, gam = _christoffel_from(gBj)
        self.gB = gBj.val
        self.gBinv = gi.val
        self.gamB = gam.val
        self.curvB = _riemann_from(gBj)
        gFj = spec.gF.jet(x[..., m:], 2)
        gi, gam = _christoffel_from(gFj)
        self.gF = gFj.val
        self.gFinv = gi.val
        self.gamF = gam.val
        self.curvF = _riemann_from(gFj)
        leaf = CoordinateMetric([[freeze(spec.f * spec.f * e.extend(m + n, list(range(m, m + n))),
                                         range(m), x[..., :m], range(m, m + n)) for e in row]
                                 for row in spec.gF.g], name="leaf")
        self.curv_leaf = _riemann_from(leaf.jet(x[..., m:], 2))
        self.gam_leaf = christoffel(leaf, x[..., m:])

    # --- f-derived quantities -------------------------------------------
    def dB(self, a=None):
        return self.df[..., : self.m]

    def dF(self):
        return self.df[..., self.m:]

    def grad_B_f(self):
        return np.einsum("...ab,...b->...a", self.gBinv, self.dB())

    def grad_F_f(self):
        return np.einsum("...ab,...b->...a", self.gFinv, self.dF())

    def hess_B_f(self):
        m = self.m
        return self.ddf[..., :m, :m] - np.einsum("...kij,...k->...ij", self.gamB, self.dB())

    def lap_B_trace(self):
        return np.einsum("...ij,...ij->...", self.gBinv, self.hess_B_f())

    def lap_F_trace(self, h: Jet):
        """tr_{g_F} Hess of the fiber block of an N-chart jet ``h``."""
        m = self.m
        dh = h.grad[..., m:]
        hh = h.hess[..., m:, m:] - np.einsum("...kij,...k->...ij", self.gamF, dh)
        return np.einsum("...ij,...ij->...", self.gFinv, hh)

    def grad_B_norm2(self):
        return np.einsum("...a,...ab,...b->...", self.dB(), self.gBinv, self.dB())

    def lnf(self) -> Jet:
        from .jets import log

        return log(self.fj)

    def SF_eff(self):
        """S^F with S^F / f² the leaf scalar curvature."""
        return self.fv**2 * self.curv_leaf.scalar

    def embed(self, base=None, fiber=None):
        out = np.zeros(self.x.shape)
        if base is not None:
            out[..., : self.m] = base
        if fiber is not None:
            out[..., self.m:] = fiber
        return out


def _jets(spec, t: Tangent, point, order=1):
    if t.tag == TangentClass.MIXED:
        raise MixedTangentError("mixed tangent vectors must be decomposed into base and fiber parts first")
    j = t.field.eval(point, order)
    m = spec.m
    if order >= 1:
        if t.tag == TangentClass.BASE:
            if np.any(np.abs(j.val[..., m:]) > 0) or np.any(np.abs(j.grad[..., :, m:]) > 1e-13):
                raise NotALiftError("base field must have zero fiber components and no fiber dependence")
        else:
            if np.any(np.abs(j.val[..., :m]) > 0) or np.any(np.abs(j.grad[..., :, :m]) > 1e-13):
                raise NotALiftError("fiber field must have zero base components and no base dependence")
    return j


def _as_tangent(spec, v, point):
    t = classify(spec, v, point)
    if t.tag == TangentClass.MIXED:
        raise MixedTangentError("mixed tangent vectors must be decomposed into base and fiber parts first")
    return t


# ----------------------------------------------------------------------
# connection


def tw_connection(spec: TwistedProductSpec, A, B, point) -> np.ndarray:
    """``∇_A B`` (coordinate components on the product chart)."""
    A, B = _as_tangent(spec, A, point), _as_tangent(spec, B, point)
    P = _Point(spec, point)
    a, b = _jets(spec, A, point), _jets(spec, B, point)
    m = spec.m
    if A.tag == TangentClass.BASE and B.tag == TangentClass.BASE:
        X, Y = a.val[..., :m], b.val[..., :m]
        dY = np.einsum("...x,...cx->...c", a.val, b.grad[..., :m, :])
        return P.embed(base=dY + np.einsum("...cij,...i,...j->...c", P.gamB, X, Y))
    if A.tag == TangentClass.BASE:  # ∇_X U = X(f)/f U
        Xf = np.einsum("...x,...x->...", a.val, P.df)
        return b.val * (Xf / P.fv)[..., None]
    if B.tag == TangentClass.BASE:  # ∇_U X = X(f)/f U
        Xf = np.einsum("...x,...x->...", b.val, P.df)
        return a.val * (Xf / P.fv)[..., None]
    U, W = a.val[..., m:], b.val[..., m:]
    lnf = P.lnf()
    Ul = np.einsum("...x,...x->...", a.val, lnf.grad)
    Wl = np.einsum("...x,...x->...", b.val, lnf.grad)
    gUW = np.einsum("...i,...ij,...j->...", U, P.gF, W)
    nablaF = np.einsum("...x,...cx->...c", a.val, b.grad[..., m:, :]) + np.einsum("...cij,...i,...j->...c", P.gamF, U, W)
    fib = Ul[..., None] * W + Wl[..., None] * U - (gUW / P.fv)[..., None] * P.grad_F_f() + nablaF
    base = -(P.fv * gUW)[..., None] * P.grad_B_f()
    return P.embed(base=base, fiber=fib)


def coordinate_connection(spec: TwistedProductSpec, A: VectorField, B: VectorField, point) -> np.ndarray:
    """Oracle: ``A(B^k) + Γ^k_ij A^i B^j`` for the product metric."""
    from .coordgeom import vector_derivative

    return vector_derivative(spec.metric, A.eval(point, 0).val, B.eval(point, 1), point)


# ----------------------------------------------------------------------
# dual connection


@dataclass(frozen=True)
class Covector:
    comps: list  # ScalarFields on the product chart
    tag: TangentClass

    def eval(self, point, order=1) -> Jet:
        coords = Jet.seed(point, order)
        return Jet.stack([c.on(coords) for c in self.comps], -1)


def tw_dual_connection(spec: TwistedProductSpec, A, w: Covector, point) -> np.ndarray:
    """``∇*_A w`` (coordinate components)."""
    A = _as_tangent(spec, A, point)
    if w.tag == TangentClass.MIXED:
        raise MixedTangentError("mixed covectors must be decomposed first")
    P = _Point(spec, point)
    a = _jets(spec, A, point)
    wj = w.eval(point, 1)
    m = spec.m
    av, wv = a.val, wj.val
    dir_w = np.einsum("...x,...kx->...k", av, wj.grad)  # A(w_k)
    Af = np.einsum("...x,...x->...", av, P.df)
    if A.tag == TangentClass.BASE and w.tag == TangentClass.BASE:
        X = av[..., :m]
        base = dir_w[..., :m] - np.einsum("...i,...jik,...j->...k", X, P.gamB, wv[..., :m])
        return P.embed(base=base)
    if A.tag == TangentClass.BASE:  # −X(f)/f ω2
        return wv * (-Af / P.fv)[..., None]
    U = av[..., m:]
    Uflat = np.einsum("...ij,...j->...i", P.gF, U)
    if w.tag == TangentClass.BASE:  # f (ω1, grad_B f) U*
        pair = np.einsum("...a,...a->...", wv[..., :m], P.grad_B_f())
        return P.embed(fiber=(P.fv * pair)[..., None] * Uflat)
    w2 = wv[..., m:]
    lnf = P.lnf()
    Ul = np.einsum("...x,...x->...", av, lnf.grad)
    wU = np.einsum("...a,...a->...", w2, U)
    gradF_lnf_flat = lnf.grad[..., m:]  # (grad_F ln f)* = d_F ln f
    gradB_f_flat = P.dB()
    w_gradFf = np.einsum("...a,...a->...", w2, P.grad_F_f())
    nablaF = dir_w[..., m:] - np.einsum("...i,...jik,...j->...k", U, P.gamF, w2)
    fib = (-Ul[..., None] * w2 - wU[..., None] * gradF_lnf_flat
           + (w_gradFf / P.fv)[..., None] * Uflat + nablaF)
    base = -(wU / P.fv)[..., None] * gradB_f_flat
    return P.embed(base=base, fiber=fib)


def coordinate_dual_connection(spec: TwistedProductSpec, A: VectorField, w: Covector, point) -> np.ndarray:
    from .coordgeom import covector_derivative

    return covector_derivative(spec.metric, A.eval(point, 0).val, w.eval(point, 1), point)


# ----------------------------------------------------------------------
# curvature


def _lnf_field(spec):
    return log_field(spec.f)


def tw_curvature(spec: TwistedProductSpec, A, B, C, point, variant: str = "validated") -> np.ndarray:
    """``R(A, B)C`` by the six structural cases (coordinate components)."""
    A, B, C = (_as_tangent(spec, v, point) for v in (A, B, C))
    P = _Point(spec, point)
    m = spec.m
    tags = (A.tag, B.tag, C.tag)
    a, b, c = (_jets(spec, t, point, 1) for t in (A, B, C))
    BASE, FIB = TangentClass.BASE, TangentClass.FIBER
    if tags == (BASE, BASE, BASE):
        rup = _rup(P.curvB, P.gB)
        v = np.einsum("...ijkl,...i,...j,...k->...l", rup, a.val[..., :m], b.val[..., :m], c.val[..., :m])
        return P.embed(base=v)
    if tags == (BASE, BASE, FIB):
        return np.zeros(P.x.shape)
    if tags in ((FIB, BASE, BASE), (BASE, FIB, BASE)):
        sgn = 1.0 if tags[0] == FIB else -1.0
        V, X = (a, b) if sgn > 0 else (b, a)
        H = np.einsum("...ij,...i,...j->...", P.hess_B_f(), X.val[..., :m], c.val[..., :m])
        return sgn * V.val * (-H / P.fv)[..., None]
    lnf = _lnf_field(spec)
    lj = lnf.eval(point, 3)
    if tags == (FIB, FIB, BASE):
        # R(V,W)X = VX(ln f) W − WX(ln f) V
        X = c.val
        VX = np.einsum("...x,...xy,...y->...", a.val, lj.hess, X)
        WX = np.einsum("...x,...xy,...y->...", b.val, lj.hess, X)
        return VX[..., None] * b.val - WX[..., None] * a.val
    if tags in ((BASE, FIB, FIB), (FIB, BASE, FIB)):
        sgn = 1.0 if tags[0] == BASE else -1.0
        X, V = (a, b) if sgn > 0 else (b, a)
        W = c
        return sgn * _case5(P, lj, X.val, V.val, W.val, variant)
    # (FIB, FIB, FIB)
    return _case6(P, lj, a.val, b.val, c.val, variant)


def _rup(curv, g):
    ginv = curv.ginv
    return np.einsum("...ijkm,...ml->...ijkl", curv.riem, ginv)


def _case5(P: _Point, lj: Jet, X, V, W, variant):
    """R(X,V)W = −g(V,W)/f ∇^B_X(grad_B f) + [WX(ln f)]V − g_F(W,V) grad_F(X(ln f))."""
    m = P.m
    gF_VW = np.einsum("...i,...ij,...j->...", V[..., m:], P.gF, W[..., m:])
    g_VW = P.fv**2 * gF_VW
    # ∇^B_X grad_B f = (Hess_B f)(X)^♯
    nabla_grad = np.einsum("...ab,...bc,...c->...a", P.gBinv, P.hess_B_f(), X[..., :m])
    WX = np.einsum("...x,...xy,...y->...", W, lj.hess, X)
    # grad_F(X(ln f)) for a lifted X: g_F^{-1} ∂_F (X^a ∂_a ln f)
    dXl = np.einsum("...a,...ab->...b", X[..., :m], lj.hess[..., :m, m:])
    gradF = np.einsum("...ab,...b->...a", P.gFinv, dXl)
    coef = g_VW if variant in ("validated", "printed") else gF_VW
    first = -(coef / P.fv)[..., None] * nabla_grad
    out = P.embed(base=first)
    out = out + WX[..., None] * V
    out[..., m:] -= gF_VW[..., None] * gradF
    return out


def _case6(P: _Point, lj: Jet, V, W, U, variant):
    """R(V,W)U = g(V,U)grad_B(W ln f) − g(W,U)grad_B(V ln f) + R^F(V,W)U − |grad_B f|²/f²(g(W,U)V − g(V,U)W)."""
    m = P.m
    Vf, Wf, Uf = V[..., m:], W[..., m:], U[..., m:]
    gVU = P.fv**2 * np.einsum("...i,...ij,...j->...", Vf, P.gF, Uf)
    gWU = P.fv**2 * np.einsum("...i,...ij,...j->...", Wf, P.gF, Uf)
    # grad_B(W(ln f)) for a lifted W
    dWl = np.einsum("...b,...ab->...a", Wf, lj.hess[..., :m, m:])
    dVl = np.einsum("...b,...ab->...a", Vf, lj.hess[..., :m, m:])
    gBW = np.einsum("...ab,...b->...a", P.gBinv, dWl)
    gBV = np.einsum("...ab,...b->...a", P.gBinv, dVl)
    rleaf = np.einsum("...ijkl,...i,...j,...k->...l", _rup(P.curv_leaf, None), Vf, Wf, Uf)
    k = P.grad_B_norm2() / P.fv**2
    base = gVU[..., None] * gBW - gWU[..., None] * gBV
    fib = rleaf - k[..., None] * (gWU[..., None] * Vf - gVU[..., None] * Wf)
    return P.embed(base=base, fiber=fib)


def coordinate_curvature(spec: TwistedProductSpec, A: VectorField, B: VectorField, C: VectorField, point) -> np.ndarray:
    """Oracle ``R(A,B)C`` from the coordinate Riemann tensor of the product metric (fields at the point)."""
    from .coordgeom import riemann_ricci_scalar

    cur = riemann_ricci_scalar(spec.metric, point)
    rup = _rup(cur, None)
    return np.einsum("...ijkl,...i,...j,...k->...l", rup, A(point), B(point), C(point))


# ----------------------------------------------------------------------
# Ricci and scalar


def _ricci_printed(P: _Point, lt: int, tags, av, bv, lj: Jet, reading: Reading):
    """Printed Ricci cases in the given reading, converted to the standard trace."""
    m = P.m
    s, ls = reading.ricci_sign, reading.base_laplacian_sign
    BASE, FIB = TangentClass.BASE, TangentClass.FIBER
    if tags == (BASE, BASE):
        ricB = s * np.einsum("...ij,...i,...j->...", P.curvB.ricci, av[..., :m], bv[..., :m])
        H = np.einsum("...ij,...i,...j->...", P.hess_B_f(), av[..., :m], bv[..., :m])
        val = ricB + lt / P.fv * H
    elif tags in ((BASE, FIB), (FIB, BASE)):
        val = (lt - 1) * np.einsum("...x,...xy,...y->...", av, lj.hess, bv)
    else:
        ricF = s * np.einsum("...ij,...i,...j->...", P.curv_leaf.ricci, av[..., m:], bv[..., m:])
        lapB = ls * P.lap_B_trace()
        g = P.fv**2 * np.einsum("...i,...ij,...j->...", av[..., m:], P.gF, bv[..., m:])
        val = ricF + (lapB / P.fv + (lt - 1) * P.grad_B_norm2() / P.fv**2) * g
    return s * val


def tw_ricci(spec: TwistedProductSpec, A, B, point, reading: Reading = READING_PRINTED) -> np.ndarray:
    """Ric(A, B) (standard trace) from the printed three-case formula."""
    A, B = _as_tangent(spec, A, point), _as_tangent(spec, B, point)
    P = _Point(spec, point)
    a, b = _jets(spec, A, point, 1), _jets(spec, B, point, 1)
    lj = _lnf_field(spec).eval(point, 2)
    return _ricci_printed(P, spec.ltilde, (A.tag, B.tag), a.val, b.val, lj, reading)


def coordinate_ricci(spec: TwistedProductSpec, A: VectorField, B: VectorField, point) -> np.ndarray:
    from .coordgeom import riemann_ricci_scalar

    cur = riemann_ricci_scalar(spec.metric, point)
    return np.einsum("...ij,...i,...j->...", cur.ricci, A(point), B(point))


def tw_scalar(spec: TwistedProductSpec, point, reading: Reading = READING_PRINTED) -> np.ndarray:
    """S = S^B + 2 l̃/f Δ_B f + S^F/f² + l̃(l̃−1)|grad_B f|²/f² (standard sign on output)."""
    P = _Point(spec, point)
    return _scalar_printed(P, spec.ltilde, reading)


def _scalar_printed(P: _Point, lt, reading: Reading):
    s = reading.ricci_sign
    lapB = reading.base_laplacian_sign * P.lap_B_trace()
    val = (s * P.curvB.scalar + 2 * lt / P.fv * lapB + s * P.SF_eff() / P.fv**2
           + lt * (lt - 1) * P.grad_B_norm2() / P.fv**2)
    return s * val


def coordinate_scalar(spec: TwistedProductSpec, point) -> np.ndarray:
    from .coordgeom import scalar_curvature

    return scalar_curvature(spec.metric, point)


# ----------------------------------------------------------------------
# Laplacian


def tw_laplacian(spec: TwistedProductSpec, h: ScalarField, point) -> np.ndarray:
    """Δ = Δ_B + Δ_F/f² + (2−n)/f³ grad_F f − (n/f) grad_B f (positive Δ_B, Δ_F)."""
    P = _Point(spec, point)
    hj = h.eval(point, 2)
    return _laplacian_from(P, hj)


def _laplacian_from(P: _Point, hj: Jet):
    m, n = P.m, P.n
    dh = hj.grad
    hB = hj.hess[..., :m, :m] - np.einsum("...kij,...k->...ij", P.gamB, dh[..., :m])
    lapB = -np.einsum("...ij,...ij->...", P.gBinv, hB)
    lapF = -P.lap_F_trace(hj)
    gradF = np.einsum("...a,...a->...", P.grad_F_f(), dh[..., m:])
    gradB = np.einsum("...a,...a->...", P.grad_B_f(), dh[..., :m])
    f = P.fv
    return lapB + lapF / f**2 + (2 - n) / f**3 * gradF - n / f * gradB


def coordinate_laplacian(spec: TwistedProductSpec, h: ScalarField, point) -> np.ndarray:
    from .coordgeom import laplacian

    return laplacian(spec.metric, h, point)


# ----------------------------------------------------------------------
# Einstein tensor


def tw_einstein(spec: TwistedProductSpec, A, B, point, reading: Reading = READING_PRINTED) -> np.ndarray:
    """Ric(A,B) − S/2 g(A,B) from tw_ricci, tw_scalar and the product metric."""
    ric = tw_ricci(spec, A, B, point, reading)
    S = tw_scalar(spec, point, reading)
    g = spec.metric.matrix(point)
    Av, Bv = (v.field if isinstance(v, Tangent) else v for v in (A, B))
    gab = np.einsum("...i,...ij,...j->...", Av(point), g, Bv(point))
    return ric - 0.5 * S * gab


def tw_einstein_case(spec: TwistedProductSpec, case: str, A, B, point, reading: Reading = READING_PRINTED):
    """The three case expansions, in the given reading, converted to the standard trace.

    A: base-base  Ric^B + l̃/f H − (S^B/2 + l̃/f Δ_B f + S^F/(2f²) + l̃(l̃−1)|∇f|²/(2f²)) g_B
    B: base-fiber (l̃ − 1) V X(ln f)
    C: fiber-fiber (Ric^F/g + (1−l̃) f Δ_B f − f² S^B/2 − S^F/2 + (2−l̃)(l̃−1)/2 |∇f|²) g / f²
    """
    A, B = _as_tangent(spec, A, point), _as_tangent(spec, B, point)
    P = _Point(spec, point)
    a, b = _jets(spec, A, point, 1), _jets(spec, B, point, 1)
    lt, m = spec.ltilde, spec.m
    s = reading.ricci_sign
    lapB = reading.base_laplacian_sign * P.lap_B_trace()
    f = P.fv
    n2 = P.grad_B_norm2()
    SB, SF = s * P.curvB.scalar, s * P.SF_eff()
    case = case.upper()
    BASE, FIB = TangentClass.BASE, TangentClass.FIBER
    if case == "A":
        if (A.tag, B.tag) != (BASE, BASE):
            raise ValueError("case A needs two base vectors")
        X, Y = a.val[..., :m], b.val[..., :m]
        ricB = s * np.einsum("...ij,...i,...j->...", P.curvB.ricci, X, Y)
        H = np.einsum("...ij,...i,...j->...", P.hess_B_f(), X, Y)
        gB = np.einsum("...i,...ij,...j->...", X, P.gB, Y)
        val = ricB + lt / f * H - (SB / 2 + lt / f * lapB + SF / (2 * f**2) + lt * (lt - 1) * n2 / (2 * f**2)) * gB
    elif case == "B":
        if {A.tag, B.tag} != {BASE, FIB}:
            raise ValueError("case B needs one base and one fiber vector")
        lj = _lnf_field(spec).eval(point, 2)
        val = (lt - 1) * np.einsum("...x,...xy,...y->...", a.val, lj.hess, b.val)
    elif case == "C":
        if (A.tag, B.tag) != (FIB, FIB):
            raise ValueError("case C needs two fiber vectors")
        gF = np.einsum("...i,...ij,...j->...", a.val[..., m:], P.gF, b.val[..., m:])
        # leaf Ricci in 2D is K_leaf · g_leaf; S^F/f² = 2 K_leaf
        K = s * P.curv_leaf.scalar / 2.0
        if P.n != 2:
            raise ValueError("case C expansion is written for a 2-dimensional fiber")
        val = (f**2 * K + (1 - lt) * f * lapB - f**2 * SB / 2 - SF / 2
               + (2 - lt) * (lt - 1) / 2 * n2) * gF
    else:
        raise ValueError(f"unknown Einstein case {case!r}")
    return s * val


def coordinate_einstein(spec: TwistedProductSpec, A: VectorField, B: VectorField, point) -> np.ndarray:
    from .coordgeom import riemann_ricci_scalar

    cur = riemann_ricci_scalar(spec.metric, point)
    g = spec.metric.matrix(point)
    a, b = A(point), B(point)
    return (np.einsum("...ij,...i,...j->...", cur.ricci, a, b)
            - 0.5 * cur.scalar * np.einsum("...ij,...i,...j->...", g, a, b))


# ----------------------------------------------------------------------
# l̃ arbitration


def arbitrate_ltilde(spec: TwistedProductSpec, points, fields_base, fields_fiber, tol: float = 1e-8) -> dict:
    """Residuals of the printed Ricci/scalar formulas against the oracle for
    every (reading, l̃) candidate."""
    from .coordgeom import riemann_ricci_scalar

    cur = riemann_ricci_scalar(spec.metric, points)
    S_or = cur.scalar
    P = _Point(spec, points)
    lj = _lnf_field(spec).eval(points, 2)
    candidates = {"m+n": spec.m + spec.n, "n": spec.n}
    out = {}
    pairs = [(A, B) for A in fields_base for B in fields_base] + \
            [(A, B) for A in fields_base for B in fields_fiber] + \
            [(A, B) for A in fields_fiber for B in fields_fiber]
    for reading in (READING_STANDARD, READING_ALT):
        for key, lt in candidates.items():
            worst = float(np.max(np.abs(_scalar_printed(P, lt, reading) - S_or)))
            for A, B in pairs:
                ta, tb = classify(spec, A, points), classify(spec, B, points)
                av, bv = A.eval(points, 0).val, B.eval(points, 0).val
                ric = _ricci_printed(P, lt, (ta.tag, tb.tag), av, bv, lj, reading)
                ref = np.einsum("...ij,...i,...j->...", cur.ricci, av, bv)
                worst = max(worst, float(np.max(np.abs(ric - ref))))
            out[(reading.name, key)] = worst
    consistent = [k for k, v in out.items() if v <= tol]
    return {"residuals": out, "consistent": consistent}


# ----------------------------------------------------------------------
# Connes density terms c1..c4 (m = n = 2)


def _lift_frame(frame, N: int, slots: Sequence[int]):
    from .jets import constant

    zero = constant(0.0, N)
    out = []
    for v in frame.fields:
        coeffs = [zero] * N
        for k, s in enumerate(slots):
            coeffs[s] = v.coeffs[k].extend(N, slots)
        out.append(VectorField(coeffs))
    return out


class _CPoint(_Point):
    """Frame data for the Connes terms."""

    def __init__(self, spec, point, base_order=None, fiber_order=None):
        super().__init__(spec, point)
        from .coordgeom import gram_schmidt_frame
        from .frames import koszul_connection

        m, N = spec.m, spec.dim
        x = self.x
        fb = gram_schmidt_frame(spec.gB, base_order)
        ff = gram_schmidt_frame(spec.gF, fiber_order)
        self.GB = koszul_connection(fb, x[..., :m]).gamma  # <∇_{e_j} e_a, e_b>
        self.GF = koszul_connection(ff, x[..., m:]).gamma
        coords = Jet.seed(x, 3)
        self.coords = coords
        c2 = Jet.seed(x, 2)  # frames are only needed to second order
        self.EB = Jet.stack([v.on(c2) for v in _lift_frame(fb, N, list(range(m)))], -2)
        self.EF = Jet.stack([v.on(c2) for v in _lift_frame(ff, N, list(range(m, N)))], -2)

    def d(self, E: Jet, h: Jet) -> Jet:
        """Frame derivatives E_a(h) as a jet of order min(2, h.order − 1)."""
        g = h.gradient()
        o = min(E.order, g.order)
        return contract("...ax,...x->...a", E.truncate(o), g.truncate(o))

    def lapB(self, h: Jet):
        m = self.m
        hb = h.hess[..., :m, :m] - np.einsum("...kij,...k->...ij", self.gamB, h.grad[..., :m])
        return -np.einsum("...ij,...ij->...", self.gBinv, hb)

    def lapF(self, h: Jet):
        return -self.lap_F_trace(h)

    def gBf(self, h: Jet):
        """grad_B f (h)."""
        return np.einsum("...a,...a->...", self.grad_B_f(), h.grad[..., : self.m])

    def gFf(self, h: Jet):
        """grad_F f (h)."""
        return np.einsum("...a,...a->...", self.grad_F_f(), h.grad[..., self.m:])

    def ipB(self, h1: Jet, h2: Jet):
        m = self.m
        return np.einsum("...a,...ab,...b->...", h1.grad[..., :m], self.gBinv, h2.grad[..., :m])

    def ipF(self, h1: Jet, h2: Jet):
        m = self.m
        return np.einsum("...a,...ab,...b->...", h1.grad[..., m:], self.gFinv, h2.grad[..., m:])

    def nabla_df(self, h: Jet):
        """Components of ∇dh in the basis {e*, ē*}: (BB, BF, FB, FF)."""
        f = self.fv[..., None, None]
        eh = self.d(self.EB, h)  # e_a(h), order 2
        ebh = self.d(self.EF, h)
        EBv, EFv = self.EB.val, self.EF.val
        e_e = np.einsum("...jx,...ax->...ja", EBv, eh.grad)  # e_j(e_a h)
        e_eb = np.einsum("...jx,...bx->...jb", EBv, ebh.grad)  # e_j(ē_b h)
        eb_e = np.einsum("...kx,...ax->...ka", EFv, eh.grad)  # ē_k(e_a h)
        eb_eb = np.einsum("...kx,...bx->...kb", EFv, ebh.grad)  # ē_k(ē_b h)
        ef = np.einsum("...ax,...x->...a", EBv, self.df)  # e_a(f)
        ebf = np.einsum("...ax,...x->...a", EFv, self.df)  # ē_b(f)
        ebl = ebf / self.fv[..., None]  # ē_b(ln f)
        ehv, ebhv = eh.val, ebh.val
        BB = e_e - np.einsum("...g,...jag->...ja", ehv, self.GB)
        BF = e_eb - ebhv[..., None, :] * ef[..., :, None] / f
        FB = eb_e - ebhv[..., :, None] * ef[..., None, :] / f
        eye = np.eye(self.n)
        diag = (self.fv * np.einsum("...a,...a->...", ehv, ef)
                + np.einsum("...g,...g->...", ebhv, ebf) / self.fv)
        FF = (eb_eb + diag[..., None, None] * eye
              - ebl[..., :, None] * ebhv[..., None, :] - ebhv[..., :, None] * ebl[..., None, :]
              - np.einsum("...g,...kbg->...kb", ebhv, self.GF))
        return BB, BF, FB, FF


@dataclass(frozen=True)
class CTerms:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    volume_factor: np.ndarray  # f^n √det g_B √det g_F

    @property
    def total(self):
        return self.c1 + self.c2 + self.c3 + self.c4

    @property
    def omega4(self):
        return self.total * self.volume_factor


def _check_c_dims(spec):
    if spec.m != 2 or spec.n != 2:
        raise ValueError(f"the c-term expansions are written for m = n = 2, got m={spec.m}, n={spec.n}")


def tw_c_terms(spec: TwistedProductSpec, f1: ScalarField, f2: ScalarField, point,
               base_order=None, fiber_order=None) -> CTerms:
    """c1..c4 from their frame expansions; ``omega4`` is (Σ c_i) fⁿ dvol_B dvol_F
    against coordinate volume."""
    _check_c_dims(spec)
    P = _CPoint(spec, point, base_order, fiber_order)
    coords = P.coords
    a, b = f1.on(coords), f2.on(coords)
    f = P.fv
    n = spec.n
    # (1) r/3 <df1, df2> with r the scalar curvature from the validated reading
    S = _scalar_printed(P, spec.ltilde, READING_PRINTED)
    ip = P.ipB(a, b) + P.ipF(a, b) / f**2
    c1 = S * ip / 3.0
    # (2) Δ<df1,df2> by the twisted Laplacian expansion
    c2 = _c2_expansion(P, a, b)
    # (3) <∇df1, ∇df2> from the frame components of ∇df
    c3 = _c3_frame(P, a, b)
    # (4) −½ Δf1 Δf2 with the twisted Laplacian
    c4 = -0.5 * _laplacian_from(P, a) * _laplacian_from(P, b)
    vol = f**n * np.sqrt(np.linalg.det(P.gB) * np.linalg.det(P.gF))
    return CTerms(c1, c2, c3, c4, vol)


def _c3_frame(P: _CPoint, a: Jet, b: Jet):
    A = P.nabla_df(a)
    B = P.nabla_df(b)
    f = P.fv
    w = (1.0, f**-2, f**-2, f**-4)
    return sum(wi * np.einsum("...ij,...ij->...", x, y) for wi, x, y in zip(w, A, B))


def _c2_expansion(P: _CPoint, a: Jet, b: Jet):
    """Term-by-term product-rule expansion of the twisted Laplacian of
    <d_B f1, d_B f2>_B + f^{-2} <d_F f1, d_F f2>_F."""
    n = P.n
    f = P.fv
    # Q_B, Q_F and 1/f² as order-2 jets
    ea, eb = P.d(P.EB, a), P.d(P.EB, b)
    fa, fb = P.d(P.EF, a), P.d(P.EF, b)
    QB = (ea * eb).sum(-1)
    QF = (fa * fb).sum(-1)
    inv2 = (P.fj * P.fj).reciprocal().truncate(2)
    lapB, lapF, gB, gF = P.lapB, P.lapF, P.gBf, P.gFf
    out = (lapB(QB) + lapF(QB) / f**2 + (2 - n) / f**3 * gF(QB) - n / f * gB(QB))
    out = out + lapB(inv2) * QF.val + lapB(QF) / f**2 - 2 * P.ipB(inv2, QF)
    out = out + (lapF(inv2) * QF.val + lapF(QF) / f**2 - 2 * P.ipF(inv2, QF)) / f**2
    out = out + (2 - n) / f**3 * gF(inv2) * QF.val + (2 - n) / f**5 * gF(QF)
    out = out - n / f * gB(inv2) * QF.val - n / f**3 * gB(QF)
    return out


def tw_c_terms_printed(spec: TwistedProductSpec, f1: ScalarField, f2: ScalarField, point) -> dict:
    """Printed variants that differ from the validated expansions.

    c1: r replaced by the printed scalar-curvature formula taken literally in
        the validated reading (its raw value, before conversion to the
        standard trace).
    c4: the printed expansion of −½ Δf1 Δf2, including its displayed factors.
    """
    _check_c_dims(spec)
    P = _CPoint(spec, point)
    a, b = f1.on(P.coords), f2.on(P.coords)
    f, n = P.fv, spec.n
    raw_S = READING_PRINTED.ricci_sign * _scalar_printed(P, spec.ltilde, READING_PRINTED)
    c1 = raw_S * (P.ipB(a, b) + P.ipF(a, b) / f**2) / 3.0
    lB1, lB2 = P.lapB(a), P.lapB(b)
    lF1, lF2 = P.lapF(a), P.lapF(b)
    gB1, gB2, gF1, gF2 = P.gBf(a), P.gBf(b), P.gFf(a), P.gFf(b)
    D1 = f**2 * lB1 + lF1
    D2 = f**2 * lB2 + lF2
    inner = (lB1 * lB2 + (lB1 * lF2 + lB2 * lF1) / f**2 + lF1 * lF2 / f**4
             + ((2 - n) / f**5 * gF2 - n / f**3 * D1 * gB2) * D1
             + ((2 - n) / f**5 * D1 - n * (2 - n) / f**4 * gB2 + (2 - n) ** 2 / f**6 * gF2) * gF1
             - (n / f**3 * D2 - n**2 / f**2 * gB2 + n * (2 - n) / f**4 * gF2) * gB1)
    c4 = -0.5 * inner
    return {"c1": c1, "c4": c4}


def coordinate_c_terms(spec: TwistedProductSpec, f1: ScalarField, f2: ScalarField, point) -> dict:
    """Oracle values of the four bracketed Connes terms on the product metric."""
    from .coordgeom import omega4_terms

    (t1, t2, t3, t4), vol = omega4_terms(spec.metric, f1, f2, point)
    return {"c1": t1, "c2": t2, "c3": t3, "c4": t4, "omega4": (t1 + t2 + t3 + t4) * vol}
