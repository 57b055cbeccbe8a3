"""Named geometric presets for the batch driver and the demos."""

from __future__ import annotations

import numpy as np

from .coordgeom import CoordinateMetric
from .jets import ScalarField, VectorField, constant, coordinates, cos_field, exp_field, sin_field
from .twisted import TwistedProductSpec

# graph fibers x3 = φ(y1, y2) with φ = a y1 y2 + b y2 + c y1²
GRAPH_COEFFICIENTS = ("a", "b", "c")


def graph_function(preset: str, coefficients: dict | None = None) -> ScalarField:
    y1, y2 = coordinates(2)
    if preset == "plane":
        if coefficients:
            raise ValueError("the plane preset takes no coefficients")
        return constant(0.0, 2)
    if preset == "quadratic-graph":
        c = {"a": 0.3, "b": -0.2, "c": 0.0}
        for k, v in (coefficients or {}).items():
            if k not in c:
                raise ValueError(f"unknown graph coefficient {k!r}; expected one of {GRAPH_COEFFICIENTS}")
            c[k] = float(v)
        return c["a"] * y1 * y2 + c["b"] * y2 + c["c"] * y1 * y1
    raise ValueError(f"unknown surface preset {preset!r}")


SURFACE_PRESETS = ("plane", "quadratic-graph")


def base_metric(preset: str) -> CoordinateMetric:
    b1, b2 = coordinates(2)
    if preset == "flat":
        return CoordinateMetric.euclidean(2)
    if preset == "diagonal-exp":
        return CoordinateMetric.diagonal([exp_field(0.3 * b1), exp_field(0.3 * b1 - 0.2 * b2)], name="diagonal-exp")
    if preset == "round-cap":
        # stereographic chart of the unit sphere
        c = 4.0 / (1.0 + b1 * b1 + b2 * b2) ** 2
        return CoordinateMetric.diagonal([c, c], name="round-cap")
    raise ValueError(f"unknown base metric preset {preset!r}")


BASE_PRESETS = ("flat", "diagonal-exp", "round-cap")


def twisting_function(preset: str) -> ScalarField:
    b1, b2, y1, y2 = coordinates(4)
    if preset == "one":
        return constant(1.0, 4)
    if preset == "warped":
        return exp_field(0.1 * b1 - 0.05 * b2)
    if preset == "twisted":
        return exp_field(0.1 * b1 + 0.2 * y1 - 0.1 * b2 * y2)
    raise ValueError(f"unknown f preset {preset!r}")


F_PRESETS = ("one", "warped", "twisted")


def connes_functions() -> tuple[ScalarField, ScalarField, ScalarField]:
    """(f0, f1, f2) on the product chart for the Connes referees."""
    b1, b2, y1, y2 = coordinates(4)
    f0 = 1 + 0.2 * b1 * y2
    f1 = sin_field(b1 + y1) + b2 * y2
    f2 = y1 * y2 + 0.5 * b1 * b1 + exp_field(0.3 * y2)
    return f0, f1, f2


def random_twisted_spec(rng: np.random.Generator, name: str = "") -> TwistedProductSpec:
    """A 2+2 twisted product with non-flat factors and fiber-dependent f,
    positive definite on the box [-0.8, 0.8]^4."""
    b = coordinates(2)
    a = rng.uniform(-0.2, 0.2, 8)
    gB = CoordinateMetric([[1 + 0.5 * abs(a[0]) * b[0] ** 2, a[1] * b[0] * b[1]],
                           [None, 1 + 0.5 * abs(a[2]) * b[1] ** 2 + a[3] * b[0]]])
    gF = CoordinateMetric([[exp_field(a[4] * b[1]), a[5] * b[0]],
                           [None, 1 + 0.5 * abs(a[6]) * b[0] ** 2]])
    X = coordinates(4)
    k = rng.uniform(-0.3, 0.3, 3)
    f = exp_field(k[0] * X[0] + k[1] * X[2] + k[2] * X[1] * X[3]) + 0.2 * X[3] ** 2
    return TwistedProductSpec(2, 2, gB, gF, f, name=name)


def random_tangent_fields(rng: np.random.Generator):
    """Two base-lifted and two fiber-lifted vector fields on the 2+2 chart."""
    b = coordinates(2)
    z = constant(0.0, 4)
    c = rng.uniform(-0.5, 0.5, 4)

    def base(u, v):
        return VectorField([u.extend(4, [0, 1]), v.extend(4, [0, 1]), z, z])

    def fib(u, v):
        return VectorField([z, z, u.extend(4, [2, 3]), v.extend(4, [2, 3])])

    Xs = [base(1 + c[0] * b[1], c[1] * b[0] * b[1]), base(sin_field(b[0]), constant(1.0, 2))]
    Us = [fib(0.5 + b[1] ** 2, c[2] * b[0]), fib(constant(0.3, 2), cos_field(c[3] + b[0]))]
    return Xs, Us
