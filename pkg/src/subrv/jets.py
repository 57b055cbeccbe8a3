"""Truncated Taylor jets and the scalar/vector fields built on them.

A :class:`Jet` carries a value together with its first, second and (optionally)
third partial derivatives.  Jets are *batched*: the value may be an array of
any leading shape ``S`` and the derivative tensors have shapes ``S + (d,)``,
``S + (d, d)`` and ``S + (d, d, d)``.  Every arithmetic rule is exact forward
mode differentiation (no step sizes anywhere).

Fields are expression builders: a :class:`ScalarField` maps the list of
coordinate jets to a jet, so evaluating at a point means seeding coordinate
jets and running the builder.  Composition and field-level partial
derivatives fall out of the same mechanism.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 3


class DomainError(ValueError):
    """Raised when a primitive is evaluated outside its domain (pole, log of
    a non-positive number, ...)."""


@lru_cache(maxsize=None)
def _sym_index(d: int, k: int):
    idx = np.indices((d,) * k).reshape(k, -1).T
    idx = np.sort(idx, axis=1)
    return tuple(idx[:, i].reshape((d,) * k) for i in range(k))


def _sym2(h):
    i, j = _sym_index(h.shape[-1], 2)
    return h[..., i, j]


def _sym3(t):
    i, j, k = _sym_index(t.shape[-1], 3)
    return t[..., i, j, k]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _outer3(a, b, c):
    return a[..., :, None, None] * b[..., None, :, None] * c[..., None, None, :]


class Jet:
    """Value plus derivative tensors up to ``order`` (0..3)."""

    __slots__ = ("val", "grad", "hess", "third")
    __array_priority__ = 100

    def __init__(self, val, grad=None, hess=None, third=None):
        self.val = np.asarray(val, dtype=float)
        self.grad = grad
        self.hess = hess if grad is not None else None
        self.third = third if self.hess is not None else None

    # ------------------------------------------------------------------
    # basic properties
    @property
    def order(self) -> int:
        if self.grad is None:
            return 0
        if self.hess is None:
            return 1
        if self.third is None:
            return 2
        return 3

    @property
    def shape(self):
        return self.val.shape

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    def parts(self):
        return [p for p in (self.val, self.grad, self.hess, self.third) if p is not None]

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape}, val={self.val!r})"

    @classmethod
    def constant(cls, value, dim: int, order: int, shape=None):
        value = np.asarray(value, dtype=float)
        if shape is not None:
            value = np.broadcast_to(value, shape).copy()
        s = value.shape
        parts = [value]
        for k in range(1, order + 1):
            parts.append(np.zeros(s + (dim,) * k))
        return cls(*parts)

    @classmethod
    def seed(cls, point, order: int):
        """Coordinate jets ``x_0 .. x_{d-1}`` at ``point`` (shape ``S + (d,)``)."""
        point = np.asarray(point, dtype=float)
        d = point.shape[-1]
        s = point.shape[:-1]
        eye = np.eye(d)
        out = []
        for i in range(d):
            parts = [point[..., i].copy()]
            if order >= 1:
                parts.append(np.broadcast_to(eye[i], s + (d,)).copy())
            for k in range(2, order + 1):
                parts.append(np.zeros(s + (d,) * k))
            out.append(cls(*parts))
        return out

    def truncate(self, order: int) -> "Jet":
        return Jet(*self.parts()[: order + 1])

    # ------------------------------------------------------------------
    # structural operations on the leading shape
    def _index_parts(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        has_ellipsis = any(i is Ellipsis for i in idx)
        out = []
        for k, p in enumerate(self.parts()):
            if has_ellipsis and k:
                out.append(p[idx + (slice(None),) * k])
            else:
                out.append(p[idx])
        return out

    def __getitem__(self, idx) -> "Jet":
        return Jet(*self._index_parts(idx))

    def sum(self, axis) -> "Jet":
        nd = self.val.ndim
        axes = (axis,) if np.isscalar(axis) else tuple(axis)
        axes = tuple(a % nd for a in axes)
        return Jet(*[p.sum(axis=axes) for p in self.parts()])

    def moveaxis(self, src, dst) -> "Jet":
        nd = self.val.ndim
        src = [s % nd for s in np.atleast_1d(src)]
        dst = [s % nd for s in np.atleast_1d(dst)]
        return Jet(*[np.moveaxis(p, src, dst) for p in self.parts()])

    def reshape(self, shape) -> "Jet":
        out = [self.val.reshape(shape)]
        new = out[0].shape
        for k, p in enumerate(self.parts()[1:], start=1):
            out.append(p.reshape(new + p.shape[p.ndim - k:]))
        return Jet(*out)

    def expand(self, axis) -> "Jet":
        """Insert a length-1 axis into the leading shape."""
        nd = self.val.ndim + 1
        axis = axis % nd
        return Jet(*[np.expand_dims(p, axis) for p in self.parts()])

    @staticmethod
    def stack(jets: Sequence["Jet"], axis: int = -1) -> "Jet":
        order = min(j.order for j in jets)
        shape = np.broadcast_shapes(*[j.shape for j in jets])
        nd = len(shape) + 1
        ax = axis % nd
        parts = []
        for k in range(order + 1):
            ps = []
            for j in jets:
                p = j.parts()[k]
                tail = p.shape[p.ndim - k:] if k else ()
                ps.append(np.broadcast_to(p, shape + tail))
            parts.append(np.stack(ps, axis=ax))
        return Jet(*parts)

    def gradient(self) -> "Jet":
        """The gradient as a jet of one lower order, shape ``S + (d,)``."""
        if self.grad is None:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.grad, self.hess, self.third)

    def partial(self, i: int) -> "Jet":
        return self.gradient()[..., i]

    # ------------------------------------------------------------------
    # arithmetic
    def __neg__(self):
        return Jet(*[-p for p in self.parts()])

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            a, b = self.parts(), other.parts()
            return Jet(*[a[k] + b[k] for k in range(order + 1)])
        other = np.asarray(other, dtype=float)
        parts = self.parts()
        if other.ndim and other.shape != self.shape:
            shape = np.broadcast_shapes(self.shape, other.shape)
            parts = [np.broadcast_to(p, shape + p.shape[p.ndim - k:] if k else shape)
                     for k, p in enumerate(parts)]
        return Jet(parts[0] + other, *parts[1:])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            out = [self.val * c]
            for k, p in enumerate(self.parts()[1:], start=1):
                out.append(p * c.reshape(c.shape + (1,) * k))
            return Jet(*out)
        a, b = self, other
        order = min(a.order, b.order)
        val = a.val * b.val
        if order == 0:
            return Jet(val)
        av, bv = a.val[..., None], b.val[..., None]
        grad = a.grad * bv + av * b.grad
        if order == 1:
            return Jet(val, grad)
        av2, bv2 = av[..., None], bv[..., None]
        cross = _outer(a.grad, b.grad)
        hess = a.hess * bv2 + (cross + np.swapaxes(cross, -1, -2)) + av2 * b.hess
        hess = _sym2(hess)
        if order == 2:
            return Jet(val, grad, hess)
        ab = a.hess[..., :, :, None] * b.grad[..., None, None, :]
        ba = b.hess[..., :, :, None] * a.grad[..., None, None, :]
        t = (a.third * bv2[..., None] + av2[..., None] * b.third
             + ab + np.moveaxis(ab, -1, -2) + np.moveaxis(ab, -1, -3)
             + ba + np.moveaxis(ba, -1, -2) + np.moveaxis(ba, -1, -3))
        return Jet(val, grad, hess, _sym3(t))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.val
        if np.any(np.abs(v) < 1e-300) or not np.all(np.isfinite(v)):
            raise DomainError("division by zero in jet reciprocal")
        inv = 1.0 / v
        return self.apply(inv, -inv**2, 2 * inv**3, -6 * inv**4)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        p = float(p)
        v = self.val
        if p == int(p) and p >= 0:
            n = int(p)
            if n == 0:
                return Jet.constant(np.ones_like(v), self.dim, self.order) if self.order else Jet(np.ones_like(v))
            coef = [v**n, n * v ** (n - 1) if n >= 1 else 0 * v,
                    n * (n - 1) * v ** (n - 2) if n >= 2 else 0 * v,
                    n * (n - 1) * (n - 2) * v ** (n - 3) if n >= 3 else 0 * v]
            return self.apply(*coef)
        if np.any(v <= 0) and p != int(p):
            raise DomainError("non-integer power of a non-positive number")
        if np.any(v == 0):
            raise DomainError("negative power of zero")
        return self.apply(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2),
                          p * (p - 1) * (p - 2) * v ** (p - 3))

    def apply(self, f0, f1, f2=None, f3=None) -> "Jet":
        """Chain rule for a univariate function with derivatives f0..f3 at ``val``."""
        order = self.order
        if order == 0:
            return Jet(f0)
        grad = f1[..., None] * self.grad
        if order == 1:
            return Jet(f0, grad)
        g = self.grad
        hess = _sym2(f2[..., None, None] * _outer(g, g) + f1[..., None, None] * self.hess)
        if order == 2:
            return Jet(f0, grad, hess)
        hg = self.hess[..., :, :, None] * g[..., None, None, :]
        t = (f3[..., None, None, None] * _outer3(g, g, g)
             + f2[..., None, None, None] * (hg + np.moveaxis(hg, -1, -2) + np.moveaxis(hg, -1, -3))
             + f1[..., None, None, None] * self.third)
        return Jet(f0, grad, hess, _sym3(t))


# ----------------------------------------------------------------------
# elementary functions on jets


def exp(x: Jet) -> Jet:
    e = np.exp(x.val)
    return x.apply(e, e, e, e)


def log(x: Jet) -> Jet:
    v = x.val
    if np.any(v <= 0):
        raise DomainError("log of a non-positive number")
    inv = 1.0 / v
    return x.apply(np.log(v), inv, -inv**2, 2 * inv**3)


def sqrt(x: Jet) -> Jet:
    v = x.val
    if np.any(v <= 0):
        raise DomainError("sqrt at a non-positive number (derivative pole)")
    s = np.sqrt(v)
    return x.apply(s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v))


def sin(x: Jet) -> Jet:
    s, c = np.sin(x.val), np.cos(x.val)
    return x.apply(s, c, -s, -c)


def cos(x: Jet) -> Jet:
    s, c = np.sin(x.val), np.cos(x.val)
    return x.apply(c, -s, -c, s)


# ----------------------------------------------------------------------
# multilinear contractions


def contract(subscripts: str, a: Jet, b) -> Jet:
    """Bilinear ``np.einsum`` over the leading shapes with the product rule.

    ``subscripts`` refers to the leading (non-derivative) axes only, e.g.
    ``"...ij,...jk->...ik"``.  ``b`` may be a plain array (constant).
    """
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        return Jet(*[np.einsum(f"{sa}{'PQR'[:k]},{sb}->{out}{'PQR'[:k]}", p, b)
                     for k, p in enumerate(a.parts())])
    order = min(a.order, b.order)
    A, B = a.parts(), b.parts()

    def e(ka, la, kb, lb, lo):
        return np.einsum(f"{sa}{la},{sb}{lb}->{out}{lo}", A[ka], B[kb])

    parts = [e(0, "", 0, "", "")]
    if order >= 1:
        parts.append(e(1, "P", 0, "", "P") + e(0, "", 1, "P", "P"))
    if order >= 2:
        c = e(1, "P", 1, "Q", "PQ")
        parts.append(_sym2(e(2, "PQ", 0, "", "PQ") + c + np.swapaxes(c, -1, -2)
                           + e(0, "", 2, "PQ", "PQ")))
    if order >= 3:
        ab = e(2, "PQ", 1, "R", "PQR")
        ba = e(1, "R", 2, "PQ", "PQR")
        t = (e(3, "PQR", 0, "", "PQR") + e(0, "", 3, "PQR", "PQR")
             + ab + np.moveaxis(ab, -1, -2) + np.moveaxis(ab, -1, -3)
             + ba + np.moveaxis(ba, -1, -2) + np.moveaxis(ba, -1, -3))
        parts.append(_sym3(t))
    return Jet(*parts)


def compose(outer: Jet, inner: Jet) -> Jet:
    """Substitute ``inner`` (shape ``S + (e,)``, derivatives in d variables)
    into ``outer`` (shape ``S``, derivatives in the e inner variables).

    ``outer`` must be expanded at ``inner.val``.
    """
    order = min(outer.order, inner.order)
    parts = [outer.val]
    if order == 0:
        return Jet(outer.val)
    c1 = inner.grad  # S + (e, d)
    parts.append(np.einsum("...i,...ip->...p", outer.grad, c1))
    if order >= 2:
        c2 = inner.hess
        h = (np.einsum("...ij,...ip,...jq->...pq", outer.hess, c1, c1)
             + np.einsum("...i,...ipq->...pq", outer.grad, c2))
        parts.append(_sym2(h))
    if order >= 3:
        c3 = inner.third
        m = np.einsum("...ij,...ipq,...jr->...pqr", outer.hess, c2, c1)
        t = (np.einsum("...ijk,...ip,...jq,...kr->...pqr", outer.third, c1, c1, c1)
             + m + np.moveaxis(m, -1, -2) + np.moveaxis(m, -1, -3)
             + np.einsum("...i,...ipqr->...pqr", outer.grad, c3))
        parts.append(_sym3(t))
    return Jet(*parts)


def matinv(a: Jet, cond_max: float = 1e12) -> Jet:
    """Inverse of a jet-valued matrix (leading shape ``S + (n, n)``).

    The derivative part of ``a`` is nilpotent of degree ``order + 1``, so the
    Neumann series terminates exactly.
    """
    a0 = a.val
    cond = np.linalg.cond(a0)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_max):
        raise np.linalg.LinAlgError(f"matrix condition number {np.max(cond):.3g} exceeds {cond_max:g}")
    b0 = np.linalg.inv(a0)
    if a.order == 0:
        return Jet(b0)
    n_part = a - a0  # zero value
    m = contract("...ij,...jk->...ik", -n_part, b0)  # -N B0, zero value
    acc = Jet.constant(b0, a.dim, a.order)
    term = acc
    for _ in range(a.order):
        term = contract("...ij,...jk->...ik", term, m)  # B0 (-N B0)^k
        acc = acc + term
    return acc


# ----------------------------------------------------------------------
# fields


class ScalarField:
    """A smooth function on a single chart of dimension ``dim``.

    Built from constants and coordinates with ``+ - * /``, powers and the
    elementary functions below.  ``eval`` is pure and deterministic.
    """

    __array_priority__ = 100

    def __init__(self, dim: int, build: Callable[[Sequence[Jet]], Jet], name: str = ""):
        self.dim = dim
        self._build = build
        self.name = name

    def __repr__(self):
        return f"ScalarField(dim={self.dim}{', ' + self.name if self.name else ''})"

    def eval(self, point, order: int = 2) -> Jet:
        if order not in (0, 1, 2, 3):
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        point = np.asarray(point, dtype=float)
        if point.shape[-1] != self.dim:
            raise ValueError(f"point has dimension {point.shape[-1]}, field expects {self.dim}")
        return self.on(Jet.seed(point, order))

    def on(self, coords: Sequence[Jet]) -> Jet:
        """Evaluate with the given coordinate jets (used for composition)."""
        out = self._build(coords)
        if not isinstance(out, Jet):
            c = coords[0]
            out = Jet.constant(np.broadcast_to(out, c.shape), c.dim if c.order else 0, c.order) \
                if c.order else Jet(np.broadcast_to(np.asarray(out, float), c.shape).copy())
        return out

    def __call__(self, point):
        return self.eval(point, 0).val

    # -- algebra -------------------------------------------------------
    def _lift(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        return constant(other, self.dim)

    def _binary(self, other, op, name):
        o = self._lift(other)
        return ScalarField(self.dim, lambda c: op(self.on(c), o.on(c)), name)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b, "add")

    def __radd__(self, other):
        return self._lift(other) + self

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b, "sub")

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, ScalarField):
            c = float(other)
            return ScalarField(self.dim, lambda x: self.on(x) * c, "scale")
        return self._binary(other, lambda a, b: a * b, "mul")

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        if not isinstance(other, ScalarField):
            c = float(other)
            return ScalarField(self.dim, lambda x: self.on(x) * (1.0 / c), "scale")
        return self._binary(other, lambda a, b: a / b, "div")

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __neg__(self):
        return ScalarField(self.dim, lambda c: -self.on(c), "neg")

    def __pow__(self, p):
        if isinstance(p, ScalarField):
            return exp_field(log_field(self) * p)
        return ScalarField(self.dim, lambda c: self.on(c) ** p, "pow")

    # -- calculus ------------------------------------------------------
    def diff(self, i: int) -> "ScalarField":
        """The field ``∂h/∂x_i``, itself jet-evaluable (one order is consumed)."""

        def build(coords):
            order = coords[0].order
            if order + 1 > MAX_ORDER:
                raise ValueError("derivative field would need a jet beyond order 3")
            if _is_seed(coords):
                return self.on(Jet.seed(np.stack([c.val for c in coords], -1), order + 1)).partial(i)
            pts = np.stack([np.broadcast_to(c.val, coords[0].shape) for c in coords], -1)
            local = self.eval(pts, order + 1).partial(i)
            return compose(local, Jet.stack(coords, -1))

        return ScalarField(self.dim, build, f"d{i}")

    def compose(self, inner: Sequence["ScalarField"]) -> "ScalarField":
        """``self(inner_0(y), ..., inner_{dim-1}(y))`` as a field in ``y``."""
        if len(inner) != self.dim:
            raise ValueError("composition needs one inner field per outer coordinate")
        d = inner[0].dim
        return ScalarField(d, lambda c: self.on([g.on(c) for g in inner]), "compose")

    def extend(self, dim: int, slots: Sequence[int]) -> "ScalarField":
        """Pull back to a bigger chart: coordinate k of ``self`` is ``slots[k]``."""
        return ScalarField(dim, lambda c: self.on([c[s] for s in slots]), "extend")


def _is_seed(coords) -> bool:
    c0 = coords[0]
    if c0.order == 0 or c0.hess is not None and np.any(c0.hess):
        return False
    eye = np.eye(len(coords))
    return all(c.grad.shape[-1] == len(coords) and np.array_equal(
        c.grad, np.broadcast_to(eye[k], c.grad.shape)) and (c.hess is None or not np.any(c.hess))
        and (c.third is None or not np.any(c.third)) for k, c in enumerate(coords))


def constant(c, dim: int) -> ScalarField:
    c = float(c)

    def build(coords):
        x = coords[0]
        return Jet.constant(np.full(x.shape, c), x.dim, x.order) if x.order else Jet(np.full(x.shape, c))

    return ScalarField(dim, build, f"const({c:g})")


def coordinate(i: int, dim: int) -> ScalarField:
    if not 0 <= i < dim:
        raise ValueError(f"coordinate index {i} out of range for dim {dim}")
    return ScalarField(dim, lambda c: c[i], f"x{i}")


def coordinates(dim: int) -> list[ScalarField]:
    return [coordinate(i, dim) for i in range(dim)]


def _unary(fn, name):
    def field_fn(h: ScalarField) -> ScalarField:
        return ScalarField(h.dim, lambda c: fn(h.on(c)), name)

    field_fn.__name__ = f"{name}_field"
    return field_fn


exp_field = _unary(exp, "exp")
log_field = _unary(log, "log")
sqrt_field = _unary(sqrt, "sqrt")
sin_field = _unary(sin, "sin")
cos_field = _unary(cos, "cos")


def as_field(h, dim: int) -> ScalarField:
    return h if isinstance(h, ScalarField) else constant(h, dim)


class VectorField:
    """Coordinate-coefficient vector field ``Σ coeffs[i] ∂_i``."""

    def __init__(self, coeffs: Sequence):
        coeffs = list(coeffs)
        dims = {c.dim for c in coeffs if isinstance(c, ScalarField)}
        if len(dims) > 1:
            raise ValueError("coefficient fields live on different charts")
        dim = dims.pop() if dims else len(coeffs)
        if len(coeffs) != dim:
            raise ValueError(f"need {dim} coefficients, got {len(coeffs)}")
        self.dim = dim
        self.coeffs = [as_field(c, dim) for c in coeffs]

    def __repr__(self):
        return f"VectorField(dim={self.dim})"

    def eval(self, point, order: int = 1) -> Jet:
        coords = Jet.seed(point, order)
        return self.on(coords)

    def on(self, coords) -> Jet:
        return Jet.stack([c.on(coords) for c in self.coeffs], -1)

    def __call__(self, point):
        return self.eval(point, 0).val

    def __add__(self, other):
        return VectorField([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return VectorField([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, h):
        return VectorField([c * h for c in self.coeffs])

    __rmul__ = __mul__

    def apply(self, h: ScalarField) -> ScalarField:
        """The scalar field ``X(h)``."""
        parts = [c * h.diff(i) for i, c in enumerate(self.coeffs)]
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out


def derivative(vec: Jet, h: Jet) -> Jet:
    """``X(h)`` from jets: ``vec`` has shape ``S + (d,)``, ``h`` shape ``S``.

    The result has order ``min(vec.order, h.order - 1)``.
    """
    dh = h.gradient()
    return (vec * dh).sum(-1) if vec.order <= dh.order else (vec.truncate(dh.order) * dh).sum(-1)


def eval_jet(field: ScalarField, point, order: int) -> Jet:
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != field.dim:
        raise ValueError(f"point has dimension {point.shape[-1]}, field expects {field.dim}")
    return field.eval(point, order)


def _check(X, h):
    if X.dim != h.dim:
        raise ValueError(f"dimension mismatch: vector field on {X.dim}-chart, function on {h.dim}-chart")


def frame_derivative(X: VectorField, h: ScalarField, point):
    """``Σ_i X^i(p) ∂_i h(p)``."""
    _check(X, h)
    coords = Jet.seed(point, 1)
    return derivative(X.on(coords).truncate(0), h.on(coords)).val


def frame_second_derivative(X: VectorField, Y: VectorField, h: ScalarField, point):
    """``X(Y(h))`` evaluated at ``point``."""
    _check(X, h)
    _check(Y, h)
    coords = Jet.seed(point, 2)
    yh = derivative(Y.on(coords).truncate(1), h.on(coords))
    return derivative(X.on(coords).truncate(0), yh).val


def bracket(X: VectorField, Y: VectorField, point, order: int = 0) -> Jet:
    """Coordinate components of ``[X, Y]`` as a jet of the requested order."""
    coords = Jet.seed(point, order + 1)
    x, y = X.on(coords), Y.on(coords)
    return _bracket_jets(x, y)


def _bracket_jets(x: Jet, y: Jet) -> Jet:
    # [X,Y]^i = X^j ∂_j Y^i - Y^j ∂_j X^i
    dx, dy = x.gradient(), y.gradient()
    o = dy.order
    xt, yt = x.truncate(o), y.truncate(o)
    return contract("...j,...ij->...i", xt, dy) - contract("...j,...ij->...i", yt, dx)


def vector_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]`` as a field (coefficients built from derivative fields)."""
    comps = []
    for i in range(X.dim):
        acc = constant(0.0, X.dim)
        for j in range(X.dim):
            acc = acc + X.coeffs[j] * Y.coeffs[i].diff(j) - Y.coeffs[j] * X.coeffs[i].diff(j)
        comps.append(acc)
    return VectorField(comps)


def polynomial_field(coeffs: dict, dim: int) -> ScalarField:
    """``Σ c_α x^α`` from a dict mapping exponent tuples to coefficients."""
    xs = coordinates(dim)
    out = constant(0.0, dim)
    for alpha, c in coeffs.items():
        term = constant(c, dim)
        for i, a in enumerate(alpha):
            if a:
                term = term * xs[i] ** a
        out = out + term
    return out


def multi_indices(dim: int, max_degree: int):
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            alpha = [0] * dim
            for i in combo:
                alpha[i] += 1
            yield tuple(alpha)
