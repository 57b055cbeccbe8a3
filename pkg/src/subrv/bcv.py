"""BCV spaces: frame, coframe, metric g_L and closed-form connection/curvature.

All tables are in the orthonormal frame (X1, X2, X̃3) with X̃3 = L^{-1/2} X3,
indices 0, 1, 2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import conventions as conv
from .frames import ConnectionTable, CurvatureTable, OrthonormalFrame
from .jets import ScalarField, VectorField, constant, coordinates


class OutsideDomainError(ValueError):
    """Point violates 1 + λ/4 (x1² + x2²) > 0."""


class Classification(str, enum.Enum):
    SPHERE_LIKE = "SPHERE_LIKE"
    SL2R_LIKE = "SL2R_LIKE"
    HEISENBERG = "HEISENBERG"


@dataclass(frozen=True)
class BcvParams:
    lam: float
    tau: float
    L: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")

    def with_L(self, L: float) -> "BcvParams":
        return BcvParams(self.lam, self.tau, L)


def conformal_factor(params: BcvParams) -> ScalarField:
    """A = 1 + λ/4 (x1² + x2²) on the 3-chart."""
    x1, x2, _ = coordinates(3)
    return 1.0 + (params.lam / 4.0) * (x1 * x1 + x2 * x2)


def check_domain(params: BcvParams, point) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    a = 1.0 + params.lam / 4.0 * (point[..., 0] ** 2 + point[..., 1] ** 2)
    if np.any(a <= conv.BCV_DOMAIN_EPS):
        raise OutsideDomainError(f"point outside the BCV chart domain (min 1+λ/4|x|² = {np.min(a):.3g})")
    return point


def frame_fields(params: BcvParams) -> tuple[VectorField, VectorField, VectorField]:
    """Unnormalized X1, X2, X3."""
    x1, x2, _ = coordinates(3)
    a = conformal_factor(params)
    zero, one = constant(0.0, 3), constant(1.0, 3)
    t = params.tau
    X1 = VectorField([a, zero, -t * x2])
    X2 = VectorField([zero, a, t * x1])
    X3 = VectorField([zero, zero, one])
    return X1, X2, X3


def bcv_frame(params: BcvParams) -> OrthonormalFrame:
    X1, X2, X3 = frame_fields(params)
    return OrthonormalFrame([X1, X2, X3 * (1.0 / np.sqrt(params.L))], name="bcv")


def frame_matrix(params: BcvParams, point) -> np.ndarray:
    """Closed form of ``A[a, i]`` for (X1, X2, X̃3)."""
    p = check_domain(params, point)
    x1, x2 = p[..., 0], p[..., 1]
    a = 1.0 + params.lam / 4.0 * (x1**2 + x2**2)
    out = np.zeros(p.shape[:-1] + (3, 3))
    out[..., 0, 0] = a
    out[..., 0, 2] = -params.tau * x2
    out[..., 1, 1] = a
    out[..., 1, 2] = params.tau * x1
    out[..., 2, 2] = 1.0 / np.sqrt(params.L)
    return out


def coframe(params: BcvParams, point) -> np.ndarray:
    """Rows ω1, ω2, ω (coordinate components) at ``point``."""
    p = check_domain(params, point)
    x1, x2 = p[..., 0], p[..., 1]
    a = 1.0 + params.lam / 4.0 * (x1**2 + x2**2)
    out = np.zeros(p.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1.0 / a
    out[..., 1, 1] = 1.0 / a
    out[..., 2, 0] = params.tau * x2 / a
    out[..., 2, 1] = -params.tau * x1 / a
    out[..., 2, 2] = 1.0
    return out


def coframe_fields(params: BcvParams) -> list[list[ScalarField]]:
    x1, x2, _ = coordinates(3)
    a = conformal_factor(params)
    zero, one = constant(0.0, 3), constant(1.0, 3)
    t = params.tau
    return [[1.0 / a, zero, zero], [zero, 1.0 / a, zero], [t * x2 / a, -t * x1 / a, one]]


def metric_fields(params: BcvParams) -> list[list[ScalarField]]:
    """Coordinate components of g_L = ω1² + ω2² + L ω²."""
    w = coframe_fields(params)
    weights = (1.0, 1.0, params.L)
    g = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            acc = w[0][i] * w[0][j] + w[1][i] * w[1][j] + (w[2][i] * w[2][j]) * weights[2]
            g[i][j] = g[j][i] = acc
    return g


def metric_matrix(params: BcvParams, point) -> np.ndarray:
    w = coframe(params, point)
    return np.einsum("...ai,a,...aj->...ij", w, np.array([1.0, 1.0, params.L]), w)


def inner(params: BcvParams, u, v, point):
    """g_L(u, v) for coordinate vectors."""
    return np.einsum("...i,...ij,...j->...", u, metric_matrix(params, point), v)


def bcv_connection_closed(params: BcvParams, point) -> ConnectionTable:
    """``gamma[i, j, k] = <∇_{E_i}E_j, E_k>`` transcribed from the closed-form table.

    Unnormalized entries:
        ∇_{X1}X1 = λ/2 x2 X2           ∇_{X1}X2 = −λ/2 x2 X1 + τ X3
        ∇_{X2}X1 = −λ/2 x1 X2 − τ X3    ∇_{X2}X2 = λ/2 x1 X1
        ∇_{X1}X3 = ∇_{X3}X1 = −τL X2    ∇_{X2}X3 = ∇_{X3}X2 = τL X1
        ∇_{X3}X3 = 0
    Each X3 slot carries a factor L^{-1/2} and <X3, X̃3> = √L.
    """
    p = check_domain(params, point)
    x1, x2 = p[..., 0], p[..., 1]
    lam, t, L = params.lam, params.tau, params.L
    s = np.sqrt(L)
    g = np.zeros(p.shape[:-1] + (3, 3, 3))
    g[..., 0, 0, 1] = lam / 2 * x2
    g[..., 0, 1, 0] = -lam / 2 * x2
    g[..., 0, 1, 2] = t * s
    g[..., 1, 0, 1] = -lam / 2 * x1
    g[..., 1, 0, 2] = -t * s
    g[..., 1, 1, 0] = lam / 2 * x1
    # ∇_{X1}X̃3 = −τL X2 / √L
    g[..., 0, 2, 1] = -t * L / s
    g[..., 2, 0, 1] = -t * L / s
    g[..., 1, 2, 0] = t * L / s
    g[..., 2, 1, 0] = t * L / s
    return ConnectionTable(g)


def bcv_curvature_printed_entry(params: BcvParams, point, A: float | None = None) -> np.ndarray:
    """The R(X1,X2)X1 entry exactly as printed (unnormalized X1, X2, X3 components).

    The printed entry contains a symbol ``A`` that is not defined next to the
    table; pass a value to evaluate it.  By default the chart factor
    1 + λ/4 (x1² + x2²) is substituted.
    """
    p = check_domain(params, point)
    x1, x2 = p[..., 0], p[..., 1]
    lam, t, L = params.lam, params.tau, params.L
    if A is None:
        A = 1.0 + lam / 4.0 * (x1**2 + x2**2)
    return np.stack([-lam**2 / 4 * x2**2,
                     -lam * A + 3 * t**2 * L + lam**2 / 4 * x1**2,
                     lam * t / 2 * x2 * np.ones_like(x1)], -1)


def bcv_curvature_closed(params: BcvParams, point) -> CurvatureTable:
    """Curvature from the closed-form table, rescaled to the orthonormal frame.

    Entries used (unnormalized X3):
        R(X1,X2)X2 = (λ − 3τ²L) X1,  R(X1,X2)X3 = 0
        R(X1,X3)X1 = −τ²L X3,  R(X1,X3)X2 = 0,  R(X1,X3)X3 = τ²L² X1
        R(X2,X3)X1 = 0,  R(X2,X3)X2 = −τ²L X3,  R(X2,X3)X3 = τ²L² X2
    R(X1,X2)X1 is fixed by antisymmetry of <R(X1,X2)·,·> to −(λ − 3τ²L) X2;
    the printed version of that entry is available separately.  Remaining
    components follow from the pair symmetries of the Riemann tensor.
    """
    p = check_domain(params, point)
    lam, t, L = params.lam, params.tau, params.L
    k12 = lam - 3 * t**2 * L  # <R(X1,X2)X2,X1>
    k3 = t**2 * L  # <R(Xa,X̃3)X̃3,Xa>, a = 1, 2
    riem = np.zeros(p.shape[:-1] + (3, 3, 3, 3))

    def put(i, j, k, l, v):
        # <R(E_i,E_j)E_k,E_l> and its symmetry images
        for (a, b, c, d, s) in ((i, j, k, l, 1), (j, i, k, l, -1), (i, j, l, k, -1), (j, i, l, k, 1),
                                (k, l, i, j, 1), (l, k, i, j, -1), (k, l, j, i, -1), (l, k, j, i, 1)):
            riem[..., a, b, c, d] = s * v

    put(0, 1, 1, 0, k12)
    put(0, 2, 2, 0, k3)
    put(1, 2, 2, 1, k3)
    return CurvatureTable.from_riem(riem)


def bcv_scalar(params: BcvParams, point=None) -> float:
    if point is not None:
        check_domain(params, point)
    return 2 * params.lam - 2 * params.tau**2 * params.L


def bcv_classify(params_or_lam, tau: float | None = None) -> Classification:
    if isinstance(params_or_lam, BcvParams):
        lam, tau = params_or_lam.lam, params_or_lam.tau
    else:
        lam = float(params_or_lam)
        if tau is None or not tau > 0:
            raise ValueError(f"tau must be > 0, got {tau}")
    if lam > 0:
        return Classification.SPHERE_LIKE
    if lam < 0:
        return Classification.SL2R_LIKE
    return Classification.HEISENBERG


def random_points(params: BcvParams, n: int, rng: np.random.Generator, radius: float = 1.5) -> np.ndarray:
    """Seeded random points inside the chart domain, |x3| ≤ radius."""
    pts = rng.uniform(-radius, radius, size=(n, 3))
    if params.lam < 0:
        rmax = 0.95 * 2.0 / np.sqrt(-params.lam)
        r = np.hypot(pts[:, 0], pts[:, 1])
        scale = np.where(r > rmax, rmax / np.maximum(r, 1e-300), 1.0)
        pts[:, :2] *= scale[:, None]
    return pts
