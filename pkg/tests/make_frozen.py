"""Regenerate tests/data/frozen.json from the finite-difference oracle.

Run from the repository root:  python tests/make_frozen.py
The package is not imported; the stored numbers are the oracle's.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

import oracles as o

P = np.array([0.3, -0.2, 0.5])

# default twisted-BCV spec of the batch driver, written out by hand
LAM, TAU = 0.0, 0.8


def phi(y):
    return 0.3 * y[0] * y[1] - 0.2 * y[1]


def dphi(y):
    return np.array([0.3 * y[1], 0.3 * y[0] - 0.2])


def gB(b):
    return np.diag([np.exp(0.3 * b[0]), np.exp(0.3 * b[0] - 0.2 * b[1])])


def twist(z):
    return np.exp(0.1 * z[0] + 0.2 * z[2] - 0.1 * z[1] * z[3])


def product_metric(L):
    g3 = o.bcv_metric(LAM, TAU, L)

    def g(z):
        out = np.zeros((4, 4))
        out[:2, :2] = gB(z[:2])
        out[2:, 2:] = twist(z) ** 2 * o.induced_metric(g3, phi, z[2:], dphi)
        return out
    return g


PRODUCT_POINTS = [[0.2, -0.3, 0.8, 0.7], [-0.4, 0.1, 1.1, 0.55], [0.05, 0.45, 0.65, 1.0]]


def f1(z):
    return np.sin(z[0] + z[2]) + z[1] * z[3]


def f2(z):
    return z[2] * z[3] + 0.5 * z[0] ** 2 + np.exp(0.3 * z[3])


def build() -> dict:
    out: dict = {}

    def rational(x):
        return 1 / (1 + 0.25 * (x[0] ** 2 + x[1] ** 2))
    out["rational_jet"] = {"point": P.tolist(), "value": rational(P), "grad": o.grad(rational, P).tolist(),
                           "hess": o.hess(rational, P).tolist()}

    E = o.bcv_frame(1.0, 1.0, 1.0)

    def x1h(x):
        return E(x)[0] @ o.grad(lambda z: z[1] * z[2], x)
    out["bcv_X1X1_x2x3"] = float(E(P)[0] @ o.grad(x1h, P))

    E2, g2 = o.bcv_frame(1.0, 1.0, 2.0), o.bcv_metric(1.0, 1.0, 2.0)
    out["bcv_structure_l1_t1_L2"] = o.structure_coefficients(E2, P).tolist()
    out["bcv_connection_l1_t1_L2"] = o.frame_connection(g2, E2, P).tolist()
    out["bcv_scalar_l1_t1_L2"] = o.scalar(g2, P)

    out["heisenberg_induced_L1"] = o.induced_metric(o.bcv_metric(0.0, 1.0, 1.0), lambda y: 0.0 * y[0],
                                                    [1.0, 1.0], lambda y: np.zeros(2)).tolist()

    surfaces = {"x3-x1": (lambda y: y[0], lambda y: np.array([1.0, 0.0])),
                "x3-x1x2/2": (lambda y: 0.5 * y[0] * y[1], lambda y: np.array([0.5 * y[1], 0.5 * y[0]]))}
    ks = []
    for lam in (0.0, 1.0):
        g3 = o.bcv_metric(lam, 1.0, 2.0)
        for name, (ph, dph) in surfaces.items():
            for y in ([0.4, 0.7], [-0.6, 0.3]):
                K = o.gauss_curvature(lambda z: o.induced_metric(g3, ph, z, dph), np.array(y))
                ks.append({"lam": lam, "surface": name, "y": y, "K": K})
    out["gauss_K_t1_L2"] = ks

    x = np.array([0.4, 0.7, 0.14])
    out["mean_curvature_l1_t1_L2"] = {"point": x.tolist(), "surface": "x3-x1x2/2",
                                     "H": o.level_set_mean_curvature(o.bcv_metric(1.0, 1.0, 2.0),
                                                                    lambda z: z[2] - 0.5 * z[0] * z[1], x)}

    out["quadrature_sqrt_r2"] = o.simpson_2d(lambda a, b: np.sqrt(a * a + b * b), (1, 1), (2, 2))

    prod = []
    for L in (2.0, 100.0):
        g = product_metric(L)
        for z in PRODUCT_POINTS:
            z = np.array(z)
            ric = o.ricci(g, z)
            prod.append({"L": L, "point": z.tolist(), "scalar": o.scalar(g, z), "ricci": ric.tolist(),
                         "omega4_bracket": float(o.omega4(g, f1, f2, z)) if L == 2.0 else None})
    out["twisted_bcv_product"] = prod
    return out


if __name__ == "__main__":
    path = Path(__file__).parent / "data" / "frozen.json"
    path.write_text(json.dumps(build(), indent=1, sort_keys=True) + "\n")
    print(f"wrote {path}")
