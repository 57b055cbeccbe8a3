"""Tensor-product Gauss–Legendre rules on boxes and graph patches."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import conventions as conv


class Measure(str, enum.Enum):
    RIEMANNIAN_L = "RIEMANNIAN_L"
    LIMIT = "LIMIT"


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple
    nodes: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        nodes = np.atleast_1d(self.nodes)
        if nodes.size == 1 and len(lo) > 1:
            nodes = np.repeat(nodes, len(lo))
        nodes = tuple(int(n) for n in nodes)
        if not (len(lo) == len(hi) == len(nodes)):
            raise ValueError("lo, hi and nodes need the same length")
        if any(not a < b for a, b in zip(lo, hi)):
            raise ValueError(f"need lo < hi component-wise, got lo={lo}, hi={hi}")
        if any(n < 2 for n in nodes):
            raise ValueError(f"node counts must be >= 2, got {nodes}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "nodes", nodes)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def refined(self, factor: int = 2) -> "Box":
        return Box(self.lo, self.hi, tuple(n * factor for n in self.nodes))


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def box_rule(box: Box) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (shape ``(N, d)``) and weights (``(N,)``) of the tensor rule."""
    xs, ws = [], []
    for a, b, n in zip(box.lo, box.hi, box.nodes):
        x, w = _leggauss(n)
        xs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    grids = np.meshgrid(*xs, indexing="ij")
    wgrid = np.ones(box.nodes)
    for k, w in enumerate(ws):
        shape = [1] * box.dim
        shape[k] = -1
        wgrid = wgrid * w.reshape(shape)
    return np.stack([g.ravel() for g in grids], -1), wgrid.ravel()


def _reduce(values: np.ndarray, weights: np.ndarray) -> float:
    # np.sum uses pairwise summation along a contiguous axis: fixed order, deterministic
    return float(np.sum(np.ascontiguousarray(values * weights)))


def integrate_box(density: Callable[[np.ndarray], np.ndarray], box: Box) -> float:
    """∫_box density, with ``density`` evaluated on all nodes at once."""
    pts, w = box_rule(box)
    vals = np.asarray(density(pts), dtype=float)
    if vals.shape != w.shape:
        vals = np.broadcast_to(vals, w.shape)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("density is not finite at every quadrature node")
    return _reduce(vals, w)


def integrate_surface_patch(surf, chartmap: Sequence, box2: Box, density, measure=Measure.LIMIT,
                            tol: float = conv.CHARACTERISTIC_TOL) -> float:
    """∫ density · (area density) over a parametrized patch.

    ``density`` maps parameter points ``(N, 2)`` to values; ``measure`` is
    ``LIMIT`` or ``RIEMANNIAN_L`` (the latter uses ``surf.params.L``).
    """
    from .surface import CharacteristicPointError, is_characteristic, surface_measure_density

    if box2.dim != 2:
        raise ValueError("surface patches are 2-dimensional boxes")
    measure = Measure(measure)
    pts, w = box_rule(box2)
    x = np.stack([c(pts) for c in chartmap], -1)
    if np.any(is_characteristic(surf, x, tol)):
        raise CharacteristicPointError("the patch contains a characteristic quadrature node")
    which = "limit" if measure is Measure.LIMIT else surf.params.L
    dens = surface_measure_density(surf, chartmap, pts, which, tol)
    vals = np.asarray(density(pts), dtype=float)
    vals = np.broadcast_to(vals, w.shape) * dens
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("integrand is not finite at every quadrature node")
    return _reduce(vals, w)
