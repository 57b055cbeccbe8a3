"""Verification tasks run by the batch driver.

Each task takes a validated ``RunConfig`` and a seeded generator and
returns a ``TaskResult``.  Status semantics: FAIL when a validated engine
disagrees with its oracle beyond tolerance; FLAGGED when the engine passes
but a printed closed form disagrees with it; PASS otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import conventions as conv
from . import presets
from .bcv import (BcvParams, bcv_connection_closed, bcv_curvature_closed, bcv_curvature_printed_entry, bcv_frame,
                  bcv_scalar, random_points)
from .coordgeom import CoordinateMetric, graph_chart, omega4_convention_scan, omega4_density
from .frames import frame_curvature, koszul_connection
from .functionals import (TwistedBcvSpec, connes_referee, einstein_referee, fit_sqrt_limit, kkw_referee, observed_rate,
                          wres_constants)
from .jets import constant, coordinates, exp_field, sin_field
from .quadrature import Box
from .surface import (SurfaceDef, a1_limit, gauss_sectional, intrinsic_curvature, is_characteristic,
                      mean_curvatures, second_fundamental_form, second_fundamental_form_oracle,
                      surface_measure_density)
from .twisted import (Covector, TangentClass, TwistedProductSpec, arbitrate_ltilde, coordinate_c_terms,
                      coordinate_connection, coordinate_curvature, coordinate_dual_connection, coordinate_laplacian, coordinate_ricci,
                      coordinate_scalar, tw_c_terms, tw_c_terms_printed, tw_connection, tw_curvature,
                      tw_dual_connection, tw_laplacian, tw_ricci, tw_scalar)

PASS, FAIL, FLAGGED = "PASS", "FAIL", "FLAGGED"


@dataclass
class TaskResult:
    name: str
    status: str
    payload: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)  # label -> [(L, value)]


def _status(ok: bool, flagged: bool = False) -> str:
    if not ok:
        return FAIL
    return FLAGGED if flagged else PASS


def _maxabs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


# ----------------------------------------------------------------------
# BCV tables


def _bcv_grid(cfg):
    for lam in cfg.bcv["lam"]:
        for tau in cfg.bcv["tau"]:
            for L in cfg.bcv["L"]:
                yield BcvParams(lam, tau, L)


def verify_lemma1(cfg, rng) -> TaskResult:
    """Closed-form connection table against the Koszul formula."""
    worst = 0.0
    for p in _bcv_grid(cfg):
        pts = random_points(p, cfg.points, rng)
        worst = max(worst, _maxabs(bcv_connection_closed(p, pts).gamma, koszul_connection(bcv_frame(p), pts).gamma))
    tol = cfg.tolerances["lemma1"]
    return TaskResult("verify-lemma1", _status(worst <= tol), {"max_diff": worst, "tol": tol})


def verify_lemma2(cfg, rng) -> TaskResult:
    """Closed-form curvature against frame curvature; scalar curvature; the printed R(X1,X2)X1 entry."""
    worst = scal = printed = 0.0
    for p in _bcv_grid(cfg):
        pts = random_points(p, cfg.points, rng)
        oracle = frame_curvature(bcv_frame(p), pts)
        closed = bcv_curvature_closed(p, pts)
        worst = max(worst, _maxabs(closed.riem, oracle.riem))
        scal = max(scal, _maxabs(oracle.scalar, bcv_scalar(p)), _maxabs(closed.scalar, bcv_scalar(p)))
        # R(X1,X2)X1 in unnormalized components: the X3 slot is the X̃3 slot over √L
        entry = oracle.riem[..., 0, 1, 0, :].copy()
        entry[..., 2] /= math.sqrt(p.L)
        printed = max(printed, _maxabs(bcv_curvature_printed_entry(p, pts), entry))
    tol, stol = cfg.tolerances["lemma2"], cfg.tolerances["lemma1"]
    flag = printed > tol
    payload = {"max_diff": worst, "scalar_max_diff": scal, "tol": tol, "scalar_tol": stol,
               "printed_R121_max_diff": printed}
    if flag:
        payload["finding"] = "the printed R(X1,X2)X1 entry disagrees with the frame curvature"
    return TaskResult("verify-lemma2", _status(worst <= tol and scal <= stol, flag), payload)


# ----------------------------------------------------------------------
# twisted products


def _random_covectors(rng):
    b = coordinates(2)
    z = constant(0.0, 4)
    c = rng.uniform(-0.5, 0.5, 2)
    return [Covector([(b[0] + c[0]).extend(4, [0, 1]), exp_field(b[1]).extend(4, [0, 1]), z, z], TangentClass.BASE),
            Covector([z, z, (b[0] * b[1] + c[1]).extend(4, [2, 3]), constant(1.0, 4)], TangentClass.FIBER)]


def verify_twisted(cfg, rng) -> TaskResult:
    """Twisted-product closed forms against the coordinate oracle; l̃ arbitration."""
    diffs: dict[str, float] = {}

    def note(key, a, b):
        diffs[key] = max(diffs.get(key, 0.0), _maxabs(a, b))

    arbitration = []
    x = coordinates(4)
    h = x[0] * x[2] + sin_field(x[1] + x[3])
    for k in range(cfg.twisted_specs):
        spec = presets.random_twisted_spec(rng, name=f"random-{k}")
        pts = rng.uniform(-0.8, 0.8, (cfg.twisted_points, 4))
        Xs, Us = presets.random_tangent_fields(rng)
        fields = Xs + Us
        for A in fields:
            for B in fields:
                note("connection", tw_connection(spec, A, B, pts), coordinate_connection(spec, A, B, pts))
                note("ricci", tw_ricci(spec, A, B, pts), coordinate_ricci(spec, A, B, pts))
                for C in fields:
                    if A is not B:
                        note("curvature", tw_curvature(spec, A, B, C, pts), coordinate_curvature(spec, A, B, C, pts))
            for w in _random_covectors(rng):
                note("dual_connection", tw_dual_connection(spec, A, w, pts), coordinate_dual_connection(spec, A, w, pts))
        note("scalar", tw_scalar(spec, pts), coordinate_scalar(spec, pts))
        note("laplacian", tw_laplacian(spec, h, pts), coordinate_laplacian(spec, h, pts))
        arb = arbitrate_ltilde(spec, pts, Xs, Us, tol=cfg.tolerances["twisted"])
        arbitration.append(sorted(f"{r}|{lt}" for r, lt in arb["consistent"]))
    tol = cfg.tolerances["twisted"]
    ok = all(v <= tol for v in diffs.values())
    ltilde = sorted({c.split("|")[1] for a in arbitration for c in a})
    consistent = len(ltilde) == 1 and all(arbitration)
    payload = {"max_diff": diffs, "tol": tol, "ltilde_consistent": arbitration, "ltilde": ltilde}
    flag = consistent and ltilde[0] != "m+n"
    if flag:
        payload["finding"] = "the closed forms hold with l̃ = n, not with l̃ = m + n (the sum of the dimensions)"
    return TaskResult("verify-twisted", _status(ok and consistent, flag), payload)


# ----------------------------------------------------------------------
# surfaces


def _graph_points(surf: SurfaceDef, phi, n, rng, box=1.5, lmin=1e-2):
    out = []
    while len(out) < n:
        y = rng.uniform(-box, box, (4 * n, 2))
        x = np.stack([y[:, 0], y[:, 1], phi(y)], -1)
        keep = ~is_characteristic(surf, x, lmin)
        out.extend(y[keep])
    return np.array(out[:n])


def gauss_referee(cfg, rng) -> TaskResult:
    """Intrinsic curvature of the induced metric against K_ambient + det II."""
    x1, x2, x3 = coordinates(3)
    y1, y2 = coordinates(2)
    surfaces = {"x3": (x3, constant(0.0, 2)), "x3-x1": (x3 - x1, y1), "x3-x1x2/2": (x3 - 0.5 * x1 * x2, 0.5 * y1 * y2)}
    worst, printed_ii = {}, {}
    for lam in (0.0, 1.0):
        p = BcvParams(lam, 1.0, 2.0)
        for name, (u, phi) in surfaces.items():
            surf = SurfaceDef(u, p, name)
            y = _graph_points(surf, phi, cfg.points // 2, rng)
            x = np.stack([y[:, 0], y[:, 1], phi(y)], -1)
            key = f"lam={lam:g},u={name}"
            worst[key] = _maxabs(intrinsic_curvature(surf, graph_chart(phi), y), gauss_sectional(surf, x)[2])
            orc = second_fundamental_form_oracle(surf, x).matrix
            printed_ii[key] = _maxabs(second_fundamental_form(surf, x, "printed").matrix, orc)
            worst[key] = max(worst[key], _maxabs(second_fundamental_form(surf, x).matrix, orc))
    tol = cfg.tolerances["gauss"]
    flag = max(printed_ii.values()) > tol
    payload = {"max_diff": worst, "tol": tol, "printed_II_max_diff": printed_ii}
    if flag:
        payload["finding"] = "the printed h22 entry disagrees with the Koszul second fundamental form when λ ≠ 0"
    return TaskResult("gauss-referee", _status(max(worst.values()) <= tol, flag), payload)


def _heisenberg_plane():
    x3 = coordinates(3)[2]
    return SurfaceDef(x3, BcvParams(0.0, 1.0, 1.0), "heisenberg-plane"), np.array([1.0, 1.0, 0.0])


def limit_a1(cfg, rng) -> TaskResult:
    """K^{Σ,L} → A1 for the Heisenberg plane at (1, 1)."""
    surf, pt = _heisenberg_plane()
    samples = [(L, float(gauss_sectional(surf.with_L(L), pt)[2])) for L in cfg.L_grid]
    fit = fit_sqrt_limit(samples)
    A1 = float(a1_limit(surf, pt))
    tol = cfg.tolerances["limit_a"]
    ok_a = abs(fit.a - A1) <= tol * abs(A1)
    ok_rate = abs(fit.rate + 0.5) <= 0.05
    payload = {"A1": A1, "fit": fit.as_dict(), "tol": tol, "a_within_tol": bool(ok_a),
               "rate_claim": -0.5, "rate_within_0.05": bool(ok_rate),
               "observed_rate_to_A1": observed_rate(samples, A1),
               "rel_err_at_L_max": abs(samples[-1][1] - A1) / abs(A1)}
    return TaskResult("limit-A1", _status(ok_a and ok_rate), payload, {"K_sigma": samples})


def limit_a1_lambda(cfg, rng) -> TaskResult:
    """K^{Σ,L} → A1 on a λ ≠ 0 surface: printed against derived closed form."""
    x1, _, x3 = coordinates(3)
    surf = SurfaceDef(x3 - x1, BcvParams(1.0, 0.8, 1.0), "x3-x1")
    pt = np.array([0.7, -0.4, 0.7])
    samples = [(L, float(gauss_sectional(surf.with_L(L), pt)[2])) for L in cfg.L_grid]
    cands = {v: float(a1_limit(surf, pt, v)) for v in ("printed", "derived")}
    tol = cfg.tolerances["limit_a"]
    # the candidates are told apart by the largest-L sample; the fit intercept is biased for 1/L data
    last = samples[-1][1]
    rel = {k: abs(last - v) / max(abs(v), 1e-300) for k, v in cands.items()}
    payload = {"candidates": cands, "rel_err_at_L_max": rel, "fit": fit_sqrt_limit(samples).as_dict(),
               "observed_rate": {k: observed_rate(samples, v) for k, v in cands.items()}, "tol": tol}
    flag = rel["printed"] > tol
    if flag:
        payload["finding"] = "the explicit λτ q̄ X3u / l term of the printed A1 is not part of the limit"
    return TaskResult("limit-A1-lambda", _status(rel["derived"] <= tol, flag), payload, {"K_sigma": samples})


def limit_surface(cfg, rng) -> TaskResult:
    """H_L → 0 and (1/√L) area density → √2 for the Heisenberg plane at (1, 1)."""
    surf, pt = _heisenberg_plane()
    chart = graph_chart(constant(0.0, 2))
    y = pt[:2]
    H = [(L, float(mean_curvatures(surf.with_L(L), pt)[0])) for L in cfg.L_grid]
    area = [(L, float(surface_measure_density(surf.with_L(L), chart, y, L)) / math.sqrt(L)) for L in cfg.L_grid]
    lim_density = float(surface_measure_density(surf, chart, y, "limit"))
    th, ta = cfg.tolerances["limit_h"], cfg.tolerances["limit_area"]
    err_h, err_a = abs(H[-1][1]), abs(area[-1][1] - math.sqrt(2))
    ok = err_h <= th and err_a <= ta and abs(lim_density - math.sqrt(2)) <= ta
    payload = {"H_fit": fit_sqrt_limit(H).as_dict(), "area_fit": fit_sqrt_limit(area).as_dict(),
               "H_err_at_L_max": err_h, "area_err_at_L_max": err_a,
               "area_observed_rate": observed_rate(area, math.sqrt(2)),
               "limit_density": lim_density, "tol_H": th, "tol_area": ta}
    return TaskResult("limit-surface", _status(ok), payload, {"H_L": H, "area_over_sqrtL": area})


# ----------------------------------------------------------------------
# Connes density


def _omega_functions():
    x = coordinates(4)
    return sin_field(x[0] + 0.5 * x[2]) + x[1] * x[3], exp_field(0.3 * x[3]) + x[0] * x[0] - 0.2 * x[1] * x[2]


def omega4_consistency(cfg, rng) -> TaskResult:
    """tw_c_terms against the coordinate density; flat hand value."""
    f1, f2 = _omega_functions()
    total, per_term, printed = 0.0, {f"c{i}": 0.0 for i in range(1, 5)}, {"c1": 0.0, "c4": 0.0}
    for k in range(cfg.omega_specs):
        spec = presets.random_twisted_spec(rng, name=f"random-{k}")
        pts = rng.uniform(-0.8, 0.8, (cfg.points // 2, 4))
        ct = tw_c_terms(spec, f1, f2, pts)
        total = max(total, _maxabs(ct.omega4, omega4_density(spec.metric, f1, f2, pts)))
        orc = coordinate_c_terms(spec, f1, f2, pts)
        for i, c in enumerate((ct.c1, ct.c2, ct.c3, ct.c4), 1):
            per_term[f"c{i}"] = max(per_term[f"c{i}"], _maxabs(c, orc[f"c{i}"]))
        pr = tw_c_terms_printed(spec, f1, f2, pts)
        for key in printed:
            printed[key] = max(printed[key], _maxabs(pr[key], orc[key]))
    x1 = coordinates(4)[0]
    flat = TwistedProductSpec(2, 2, CoordinateMetric.euclidean(2), CoordinateMetric.euclidean(2), constant(1.0, 4))
    pts = rng.uniform(-1, 1, (8, 4))
    hand = max(_maxabs(omega4_density(CoordinateMetric.euclidean(4), x1 * x1, x1 * x1, pts), -6.0),
               _maxabs(tw_c_terms(flat, x1 * x1, x1 * x1, pts).omega4, -6.0))
    tol = cfg.tolerances["omega4"]
    ok = total <= tol and hand <= 1e-12
    flag = any(v > tol for v in per_term.values()) or any(v > tol for v in printed.values())
    payload = {"omega4_max_diff": total, "per_term_max_diff": per_term, "printed_max_diff": printed,
               "flat_hand_value_diff": hand, "tol": tol}
    if flag:
        payload["finding"] = "printed c-term expansions disagree with the coordinate density term by term"
    return TaskResult("omega4-consistency", _status(ok, flag), payload)


def omega4_conformal(cfg, rng) -> TaskResult:
    """Conformal invariance of the density for every (r, Δ) sign pairing."""
    x = coordinates(4)
    phis = [0.1 * x[0] * x[1], 0.2 * sin_field(x[2]) + 0.1 * x[3] * x[3],
            0.05 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])]
    f1, f2 = _omega_functions()
    pts = rng.uniform(-0.8, 0.8, (cfg.points // 2, 4))
    scan = omega4_convention_scan(CoordinateMetric.euclidean(4), phis, f1, f2, pts)
    table = {f"r_sign={r:+d},lap_sign={s:+d}": v for (r, s), v in scan.items()}
    ledger = scan[(conv.OMEGA4_R_SIGN, conv.OMEGA4_LAPLACIAN_SIGN)]
    tol = cfg.tolerances["conformal"]
    return TaskResult("omega4-conformal", _status(ledger <= tol),
                      {"residuals": table, "ledger_pairing_residual": ledger, "tol": tol})


# ----------------------------------------------------------------------
# finite-L referees


def _twisted_bcv(cfg) -> TwistedBcvSpec:
    s = cfg.surface
    return TwistedBcvSpec(presets.base_metric(cfg.base_metric), BcvParams(s["lam"], s["tau"], 1.0),
                          presets.graph_function(s["preset"], s["coefficients"]),
                          presets.twisting_function(cfg.f), name=s["preset"])


def _boxes(cfg):
    lo, hi = cfg.boxes["base"]
    flo, fhi = cfg.boxes["fiber"]
    return Box(lo, hi, cfg.nodes["base"]), Box(flo, fhi, cfg.nodes["fiber"])


def _referee_result(name, comps, tol) -> TaskResult:
    records, samples = {}, {}
    ok, flag = True, False
    for c in comps:
        d = c.as_dict()
        d["derived_accepts"] = c.accepts("derived", tol)
        d["printed_accepts"] = c.accepts("printed", tol)
        records[c.name] = d
        samples[c.name] = list(c.samples)
        ok &= d["derived_accepts"]
        flag |= not d["printed_accepts"]
    payload = {"tol": tol, "check_L": comps[0].check_L, "comparisons": records}
    if flag:
        payload["finding"] = "printed limit integrands disagree with the finite-L referee; both candidates reported"
    return TaskResult(name, _status(ok, flag), payload, samples)


def referee_kkw(cfg, rng) -> TaskResult:
    """(1/√L) ∫ S f² against the KKW limit integrands."""
    bb, fb = _boxes(cfg)
    return _referee_result("referee-kkw", [kkw_referee(_twisted_bcv(cfg), bb, fb, cfg.L_grid)],
                           cfg.tolerances["referee"])


def referee_einstein(cfg, rng) -> TaskResult:
    """Einstein functional cases A, B, C against their finite-L integrals."""
    spec = _twisted_bcv(cfg)
    bb, fb = _boxes(cfg)
    X, Y = (1.0, 0.5), (0.3, -1.0)
    comps = [einstein_referee(spec, c, X, Y, bb, fb, cfg.L_grid) for c in ("A", "B", "C")]
    return _referee_result("referee-einstein", comps, cfg.tolerances["referee"])


def referee_connes(cfg, rng) -> TaskResult:
    """(1/√L) ∫ f0 c_i f² against the d_i limit integrands."""
    bb, fb = _boxes(cfg)
    f0, f1, f2 = presets.connes_functions()
    comps = connes_referee(_twisted_bcv(cfg), f0, f1, f2, bb, fb, cfg.L_grid)
    return _referee_result("referee-connes", comps, cfg.tolerances["referee"])


# ----------------------------------------------------------------------
# constants


def constants(cfg, rng) -> TaskResult:
    """Wres proportionality constants for m = 1, 2."""
    got = {"KKW_2": wres_constants(2, "KKW"), "DSZ_2": wres_constants(2, "DSZ"), "KKW_1": wres_constants(1, "KKW")}
    want = {"KKW_2": math.pi**2 / 3, "DSZ_2": 4 * math.pi**2 / 3, "KKW_1": 0.0}
    rel = {k: abs(got[k] - want[k]) / max(abs(want[k]), 1.0) for k in got}
    tol = cfg.tolerances["constants"]
    return TaskResult("wres-constants", _status(max(rel.values()) <= tol), {"values": got, "rel_err": rel, "tol": tol})


TASKS: dict[str, Callable] = {
    "verify-lemma1": verify_lemma1,
    "verify-lemma2": verify_lemma2,
    "verify-twisted": verify_twisted,
    "gauss-referee": gauss_referee,
    "limit-A1": limit_a1,
    "limit-A1-lambda": limit_a1_lambda,
    "limit-surface": limit_surface,
    "omega4-consistency": omega4_consistency,
    "omega4-conformal": omega4_conformal,
    "referee-kkw": referee_kkw,
    "referee-einstein": referee_einstein,
    "referee-connes": referee_connes,
    "wres-constants": constants,
}
