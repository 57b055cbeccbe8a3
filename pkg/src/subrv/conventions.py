"""The sign conventions shared by every module.

Curvature operator
    R(X, Y)Z = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_[X,Y] Z, with components
    ``riem[i, j, k, l] = <R(E_i, E_j)E_k, E_l>``.
Sectional curvature
    K(E_i, E_j) = −riem[i, j, i, j] = <R(E_i, E_j)E_j, E_i>, positive on round spheres.
Ricci and scalar curvature
    Ric(Y, Z) = Σ_k <R(E_k, Y)Z, E_k> (trace over the first slot), S = tr Ric.
    The round unit 2-sphere has S = 2.  The alternative trace
    Σ_k <R(Y, E_k)Z, E_k> is its negative; it is kept available as
    ``RICCI_TRACE_ALT`` because some closed forms are written in it.
Laplacian
    Δ h = −tr_g(∇dh) (positive operator), so Δ(x_1²) = −2 on flat space.
    ``TRACE_LAPLACIAN`` = −Δ is the divergence of the gradient.
"""

from __future__ import annotations

RIEMANN_SIGN = +1
SECTIONAL_SIGN = -1  # K(i, j) = SECTIONAL_SIGN * riem[i, j, i, j]
RICCI_TRACE_STANDARD = +1
RICCI_TRACE_ALT = -1
LAPLACIAN_SIGN = -1  # Δ = LAPLACIAN_SIGN * tr_g Hess

# Pairing used inside the Connes density: r is the standard scalar curvature
# and Δ the positive Laplacian.  Chosen by the conformal-invariance check in
# ``coordgeom.omega4_convention_scan``.
OMEGA4_R_SIGN = +1
OMEGA4_LAPLACIAN_SIGN = -1

# Characteristic-point tolerance on l = |∇_H u|.
CHARACTERISTIC_TOL = 1e-8

# Chart-domain guard for BCV spaces: 1 + λ/4 (x1² + x2²) must exceed this.
BCV_DOMAIN_EPS = 1e-8

# Frame matrices with a larger condition number are rejected.
COND_MAX = 1e12


def describe() -> dict:
    """Machine-readable echo of the ledger (used by reports and the CLI)."""
    return {
        "curvature_operator": "R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z",
        "riem_components": "riem[i,j,k,l] = <R(E_i,E_j)E_k,E_l>",
        "sectional": "K(E_i,E_j) = -riem[i,j,i,j]",
        "ricci": "Ric(Y,Z) = sum_k <R(E_k,Y)Z,E_k>  (unit 2-sphere: S = 2)",
        "ricci_alt_trace": "sum_k <R(Y,E_k)Z,E_k> = -Ric(Y,Z)",
        "scalar": "S = sum_k Ric(E_k,E_k)",
        "laplacian": "Δh = -tr_g(∇dh)  (flat: Δ(x1^2) = -2)",
        "omega4_pairing": {"r_sign": OMEGA4_R_SIGN, "laplacian_sign": OMEGA4_LAPLACIAN_SIGN},
        "characteristic_tol": CHARACTERISTIC_TOL,
        "bcv_domain_eps": BCV_DOMAIN_EPS,
        "cond_max": COND_MAX,
    }
