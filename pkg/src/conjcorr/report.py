"""Assembly of machine-readable reports from the library pieces.

Reports are plain nested dicts with a fixed key order, finite floats only
(masked points are simply not listed) and no timestamps, so identical
inputs serialise to identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from . import arthurs_kelly as ak
from . import causal_densities as cd
from . import composite
from .errors import InfeasibleCombinationError
from .quantum_correlations import global_correlation, quantum_report, support_mask
from .states import GaussianPacketParams, WaveFunction, build_gaussian_packet, moments

SCHEMA_VERSION = 1
UNITS = "natural units, hbar = 1"
CURVE_POINTS = 65
AK_GLOBAL_TOL = 1e-5
NOISE_TOL = 1e-6


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float)]


def _curve(points, values, x_name: str) -> dict:
    return {x_name: _floats(points), "value": _floats(values)}


def curve_points(wf: WaveFunction, n: int = CURVE_POINTS) -> np.ndarray:
    pts = wf.points[support_mask(wf)]
    if pts.size > n:
        pts = pts[np.linspace(0, pts.size - 1, n).round().astype(int)]
    return pts


def _density_block(rep) -> dict:
    return {
        "global": float(rep.global_correlation),
        "local_p_given_q": _curve(rep.q_points, rep.p_given_q, "q"),
        "local_q_given_p": _curve(rep.p_points, rep.q_given_p, "p"),
    }


def _max_abs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def build_report(wf: WaveFunction, state_spec: dict, b_values, n_curve: int = CURVE_POINTS) -> dict:
    m = moments(wf)
    q_pts = curve_points(wf.position(), n_curve)
    p_pts = curve_points(wf.momentum(), n_curve)
    quantum = quantum_report(wf, q_pts, p_pts)
    g_q = quantum.global_correlation

    ak_blocks, checks = [], []
    for b in b_values:
        joint = ak.joint_distribution(wf, b)
        jm = ak.joint_moments(joint)
        d1, d2 = math.sqrt(jm["var_x1"]), math.sqrt(jm["var_x2"])
        x1_excess = jm["var_x1"] - m.delta_q ** 2 - b * b
        x2_excess = jm["var_x2"] - m.delta_p ** 2 - 1.0 / (4 * b * b)
        ak_blocks.append({
            "b": float(b),
            "mass": joint.mass,
            "global_moment": jm["global"],
            "mean_x1": jm["mean_x1"],
            "mean_x2": jm["mean_x2"],
            "dispersions": {"delta_x1": d1, "delta_x2": d2, "product": d1 * d2},
            "noise_relation": {"x1_excess": x1_excess, "x2_excess": x2_excess},
            "conditional_given_x1": _curve(q_pts, ak.conditional_mean(wf, b, "given_x1", q_pts), "x1"),
            "conditional_given_x2": _curve(p_pts, ak.conditional_mean(wf, b, "given_x2", p_pts), "x2"),
        })
        checks.append(("ak_global_exact", b, abs(jm["global"] - g_q) <= AK_GLOBAL_TOL))
        checks.append(("noise_relation", b,
                       abs(x1_excess) <= NOISE_TOL and abs(x2_excess) <= NOISE_TOL and d1 * d2 >= 1 - 1e-9))

    plus = cd.curve_report(cd.build_transport_curve(wf, 1), q_pts, p_pts)
    minus = cd.curve_report(cd.build_transport_curve(wf, -1), q_pts, p_pts)
    reference = cd.correlationless_reference(wf, q_pts, p_pts)
    residuals = {
        "ak_global_minus_quantum": [blk["global_moment"] - g_q for blk in ak_blocks],
        "causal_plus_global_minus_quantum": plus.global_correlation - g_q,
        "causal_minus_global_minus_quantum": minus.global_correlation - g_q,
        "correlationless_global_minus_quantum": -g_q,
        "causal_plus_local_p_given_q_max_abs": _max_abs(plus.p_given_q, quantum.p_given_q),
        "correlationless_local_p_given_q_max_abs": _max_abs(reference.p_given_q, quantum.p_given_q),
    }
    try:
        combo = cd.fit_convex_combination(wf)
    except InfeasibleCombinationError as exc:
        combo_block = {"feasible": False, "reason": str(exc),
                       "quantum_global": exc.quantum_global,
                       "global_plus": exc.global_plus, "global_minus": exc.global_minus}
    else:
        crep = cd.combo_correlations(combo, q_pts, p_pts)
        combo_block = {"feasible": True, "lambda_plus": combo.lambda_plus,
                       "lambda_minus": combo.lambda_minus, **_density_block(crep)}
        residuals["combo_global_minus_quantum"] = crep.global_correlation - g_q
        residuals["combo_local_p_given_q_max_abs"] = _max_abs(crep.p_given_q, quantum.p_given_q)
        residuals["combo_local_q_given_p_max_abs"] = _max_abs(crep.q_given_p, quantum.q_given_p)

    return {
        "schema_version": SCHEMA_VERSION,
        "units": UNITS,
        "state": {
            "spec": state_spec,
            "position_grid": _grid_dict(wf.position().grid),
            "momentum_grid": _grid_dict(wf.momentum().grid),
        },
        "moments": {"mean_q": m.mean_q, "mean_p": m.mean_p, "delta_q": m.delta_q,
                    "delta_p": m.delta_p, "uncertainty_product": m.uncertainty_product},
        "quantum": _density_block(quantum),
        "arthurs_kelly": ak_blocks,
        "causal": {
            "epsilon_plus": _density_block(plus),
            "epsilon_minus": _density_block(minus),
            "combo": combo_block,
        },
        "correlationless": _density_block(reference),
        "residuals": residuals,
        "checks": [{"name": n, "b": float(b), "passed": bool(ok)} for n, b, ok in checks],
    }


def _grid_dict(g) -> dict:
    return {"x_min": g.x_min, "x_max": g.x_max, "n_points": g.n_points}


def report_passed(report: dict) -> bool:
    return all(c["passed"] for c in report["checks"])


def report_rows(report: dict) -> list[tuple]:
    """Long-format rows (section, quantity, b, x, value) for CSV output."""
    rows = []

    def curves(section, block, b=""):
        for key in ("local_p_given_q", "local_q_given_p"):
            xk = "q" if key.endswith("_q") else "p"
            for x, v in zip(block[key][xk], block[key]["value"]):
                rows.append((section, key, b, x, v))
        rows.append((section, "global", b, "", block["global"]))

    for k, v in report["moments"].items():
        rows.append(("moments", k, "", "", v))
    curves("quantum", report["quantum"])
    for blk in report["arthurs_kelly"]:
        b = blk["b"]
        rows.append(("arthurs_kelly", "global_moment", b, "", blk["global_moment"]))
        for k, v in blk["dispersions"].items():
            rows.append(("arthurs_kelly", k, b, "", v))
        for key, xk in (("conditional_given_x1", "x1"), ("conditional_given_x2", "x2")):
            for x, v in zip(blk[key][xk], blk[key]["value"]):
                rows.append(("arthurs_kelly", key, b, x, v))
    curves("causal_plus", report["causal"]["epsilon_plus"])
    curves("causal_minus", report["causal"]["epsilon_minus"])
    combo = report["causal"]["combo"]
    if combo["feasible"]:
        rows.append(("causal_combo", "lambda_plus", "", "", combo["lambda_plus"]))
        curves("causal_combo", combo)
    curves("correlationless", report["correlationless"])
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def figure_rows(b_over_dq, dqdp) -> list[tuple]:
    """Ratio of the A-K local slope to the eps=+1 causal slope for Gaussian packets.

    Rows follow schedule order: outer loop over the uncertainty product,
    inner loop over b / dq.
    """
    if not b_over_dq or not dqdp:
        raise ValueError("both schedules must be nonempty")
    if any(r <= 0 for r in b_over_dq):
        raise ValueError("b/dq values must be positive")
    if any(x < 0.5 for x in dqdp):
        raise ValueError("uncertainty products must be at least 1/2")
    out = {}
    for x in dqdp:
        wf = build_gaussian_packet(GaussianPacketParams.with_uncertainty_product(x))
        m = moments(wf)
        q_lo, q_hi = m.mean_q - m.delta_q, m.mean_q + m.delta_q
        curve = cd.build_transport_curve(wf, 1)
        causal_slope = float(curve(q_hi) - curve(q_lo)) / (2 * m.delta_q)
        for r in b_over_dq:
            b = r * m.delta_q
            ak_slope = (ak.conditional_mean(wf, b, "given_x1", q_hi)
                        - ak.conditional_mean(wf, b, "given_x1", q_lo)) / (2 * m.delta_q)
            numeric = ak_slope / causal_slope
            closed = math.sqrt(max(1.0 - (2.0 * x) ** -2, 0.0)) / (1.0 + r * r)
            out[(r, x)] = (float(r), float(x), numeric, closed, abs(numeric - closed))
    return [out[(r, x)] for x in dqdp for r in b_over_dq]


FIGURE_HEADER = ("b_over_dq", "dqdp", "ratio_numeric", "ratio_closed_form", "abs_error")


def estimate_summary(est: ak.CorrelationEstimate, grid_moments: dict, b: float) -> dict:
    def binned(c: ak.BinnedCurve):
        return {
            "centers": _floats(c.centers),
            "means": [None if f else float(v) for v, f in zip(c.means, c.flagged)],
            "std_errors": [None if f else float(v) for v, f in zip(c.std_errors, c.flagged)],
            "counts": [int(v) for v in c.counts],
            "flagged": [bool(v) for v in c.flagged],
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "units": UNITS,
        "b": float(b),
        "n_samples": est.n_samples,
        "seed": est.seed,
        "mean_x1": {"estimate": est.mean_x1, "std_error": est.mean_x1_se,
                    "grid_value": grid_moments["mean_x1"]},
        "mean_x2": {"estimate": est.mean_x2, "std_error": est.mean_x2_se,
                    "grid_value": grid_moments["mean_x2"]},
        "global_moment": {"estimate": est.global_moment, "std_error": est.global_se,
                          "grid_value": grid_moments["global"],
                          "z_score": (est.global_moment - grid_moments["global"]) / est.global_se},
        "conditional_given_x1": binned(est.given_x1),
        "conditional_given_x2": binned(est.given_x2),
    }


def composite_report(kind: str, params: dict) -> dict:
    if kind == "epr":
        p = composite.EPRParams(**params)
        density = composite.build_epr_density(p)
    elif kind == "entangled-coherent":
        kw = dict(params)
        kw["alpha"] = complex(*kw["alpha"])
        kw["beta"] = complex(*kw["beta"])
        density = composite.build_entangled_coherent_density(**kw)
    else:
        raise ValueError(f"unknown composite kind {kind!r}")

    def factor(c):
        return {"lambda_plus": c.lambda_plus, "lambda_minus": c.lambda_minus,
                "global_plus": c.global_plus, "global_minus": c.global_minus,
                "combo_global": c.global_correlation,
                "quantum_global": global_correlation(c.wavefunction)}

    pairs = composite.verify(density)
    mat = density.coefficient_matrix()
    brackets = [[composite.poisson_bracket(a, b) for b in mat] for a in mat]
    worst = max(v["residual"] for v in pairs.values())
    return {
        "schema_version": SCHEMA_VERSION,
        "units": UNITS,
        "kind": kind,
        "params": params,
        "factors": {"a": factor(density.factor_a), "b": factor(density.factor_b)},
        "pair_marginals": pairs,
        "poisson_brackets": brackets,
        "max_residual": worst,
        "passed": worst < 1e-5,
    }
