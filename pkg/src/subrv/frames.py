"""Brute-force geometry of a declared-orthonormal frame.

Given vector fields E_0..E_{n-1} (coordinate coefficients), the metric making
them orthonormal is implicit.  Everything here is computed from jets of the
coefficient matrix ``A[a, i] = E_a^i``: brackets, structure coefficients,
the Koszul connection and the Riemann tensor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import conventions as conv
from .jets import Jet, VectorField, contract, matinv


class SingularFrameError(np.linalg.LinAlgError):
    pass


class OrthonormalFrame:
    def __init__(self, fields: Sequence[VectorField], name: str = ""):
        fields = list(fields)
        dims = {f.dim for f in fields}
        if len(dims) != 1:
            raise ValueError("frame fields live on different charts")
        self.dim = dims.pop()
        if len(fields) != self.dim:
            raise ValueError(f"a frame on a {self.dim}-chart needs {self.dim} fields, got {len(fields)}")
        self.fields = fields
        self.name = name

    def __repr__(self):
        return f"OrthonormalFrame(dim={self.dim}{', ' + self.name if self.name else ''})"

    def matrix_jet(self, point, order: int = 0) -> Jet:
        """``A[a, i]`` with leading shape ``S + (n, n)``."""
        coords = Jet.seed(point, order)
        return self.matrix_on(coords)

    def matrix_on(self, coords) -> Jet:
        return Jet.stack([f.on(coords) for f in self.fields], -2)

    def matrix(self, point) -> np.ndarray:
        return self.matrix_jet(point, 0).val

    def components(self, vec, point) -> np.ndarray:
        """Frame components of coordinate vectors ``vec`` (shape ``S + (n,)``)."""
        a = self.matrix(point)
        return np.einsum("...i,...ia->...a", vec, _inv(a))


def _inv(a):
    cond = np.linalg.cond(a)
    if np.any(~np.isfinite(cond)) or np.any(cond > conv.COND_MAX):
        raise SingularFrameError(f"frame matrix condition number {np.max(cond):.3g} exceeds {conv.COND_MAX:g}")
    return np.linalg.inv(a)


def _structure_jet(a: Jet) -> Jet:
    """Structure coefficients ``c[a, b, k]`` from a coefficient-matrix jet of
    order ``o + 1``; the result has order ``o``."""
    da = a.gradient()  # [a, i, x]
    at = a.truncate(da.order)
    # bracket[a, b, i] = A[a, x] ∂_x A[b, i] − A[b, x] ∂_x A[a, i]
    t = contract("...ax,...bix->...abi", at, da)
    br = t - t.moveaxis(-3, -2)
    try:
        ainv = matinv(at, conv.COND_MAX)
    except np.linalg.LinAlgError as exc:
        raise SingularFrameError(str(exc)) from exc
    return contract("...abi,...ik->...abk", br, ainv)


def _koszul(c: Jet) -> Jet:
    # 2 γ_ijk = c_ijk − c_jki + c_kij
    c_jki = c.moveaxis([-3, -2, -1], [-2, -1, -3])  # value at [i,j,k] is c[j,k,i]
    c_kij = c.moveaxis([-3, -2, -1], [-1, -3, -2])  # value at [i,j,k] is c[k,i,j]
    return (c - c_jki + c_kij) * 0.5


def structure_coefficients(frame: OrthonormalFrame, point) -> np.ndarray:
    """``[E_i, E_j] = Σ_k c[i, j, k] E_k`` at ``point``."""
    return _structure_jet(frame.matrix_jet(point, 1)).val


def bracket_components(frame: OrthonormalFrame, point) -> np.ndarray:
    """Coordinate components ``[E_a, E_b]^i``."""
    a = frame.matrix_jet(point, 1)
    t = np.einsum("...ax,...bix->...abi", a.val, a.grad)
    return t - np.swapaxes(t, -3, -2)


@dataclass(frozen=True)
class ConnectionTable:
    """``gamma[i, j, k] = <∇_{E_i} E_j, E_k>``."""

    gamma: np.ndarray

    def covariant(self, w, v) -> np.ndarray:
        """Frame components of the connection part Σ w^i v^j γ_ijk."""
        return np.einsum("...i,...j,...ijk->...k", w, v, self.gamma)


@dataclass(frozen=True)
class CurvatureTable:
    """``riem[i, j, k, l] = <R(E_i, E_j)E_k, E_l>`` plus Ricci and scalar."""

    riem: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray

    @classmethod
    def from_riem(cls, riem: np.ndarray) -> "CurvatureTable":
        ricci = conv.RICCI_TRACE_STANDARD * np.einsum("...kabk->...ab", riem)
        return cls(riem, ricci, np.einsum("...kk->...", ricci))

    @property
    def ricci_alt(self) -> np.ndarray:
        return -self.ricci


def koszul_connection(frame: OrthonormalFrame, point) -> ConnectionTable:
    return ConnectionTable(_koszul(_structure_jet(frame.matrix_jet(point, 1))).val)


def connection_jet(frame: OrthonormalFrame, point, order: int = 1) -> tuple[Jet, Jet, Jet]:
    """``(A, c, gamma)`` jets; gamma and c have the requested order."""
    a = frame.matrix_jet(point, order + 1)
    c = _structure_jet(a)
    return a, c, _koszul(c)


def riemann_from_gamma(a: np.ndarray, c: np.ndarray, gamma: Jet) -> np.ndarray:
    """Frame Riemann tensor from a first-order gamma jet.

    riem[i,j,k,l] = E_i(γ_jkl) − E_j(γ_ikl) + Σ_m (γ_jkm γ_iml − γ_ikm γ_jml) − Σ_p c_ijp γ_pkl
    """
    g = gamma.val
    dg = np.einsum("...ix,...jklx->...ijkl", a, gamma.grad)  # E_i(γ_jkl)
    quad = np.einsum("...jkm,...iml->...ijkl", g, g)
    return (dg - np.swapaxes(dg, -4, -3) + quad - np.swapaxes(quad, -4, -3)
            - np.einsum("...ijp,...pkl->...ijkl", c, g))


def frame_curvature(frame: OrthonormalFrame, point) -> CurvatureTable:
    a, c, gamma = connection_jet(frame, point, 1)
    return CurvatureTable.from_riem(riemann_from_gamma(a.val, c.val, gamma))


def sectional(curv: CurvatureTable, i: int, j: int):
    if i == j:
        raise ValueError("sectional curvature needs two distinct frame indices")
    return conv.SECTIONAL_SIGN * curv.riem[..., i, j, i, j]


def frame_directional(frame: OrthonormalFrame, a: int, h, point):
    """``E_a(h)`` for a scalar field ``h``."""
    from .jets import frame_derivative

    return frame_derivative(frame.fields[a], h, point)
