"""
Summaries of lab runs against the acceptance thresholds: log-log slopes,
fitted constants and their stability across p.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

FLAT_TOL = 1e-6
SLOPE_R0 = (-0.7, -0.3)
SLOPE_R1_MAX = -0.8
DECAY_VARIATION = 0.2
EXT_C_STABILITY = 0.3
LINF_C_MAX = 10.0
ALGEBRA_TOL = 1e-8


def loglog_slope(ps: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(ps, float)), np.log(np.asarray(values, float)), 1)[0])


def flat_norms(ps, res_norms, ext_norms, codim: int) -> dict:
    """res_norm / p^(codim/2) and ext_norm * p^(codim/2) against 1."""
    ps = np.asarray(ps, float)
    r = np.asarray(res_norms) / ps ** (codim / 2) - 1
    e = np.asarray(ext_norms) * ps ** (codim / 2) - 1
    dev = float(max(np.abs(r).max(), np.abs(e).max()))
    return {"max_deviation": dev, "passed": dev <= FLAT_TOL}


def convergence_slopes(ps, err_r0, err_r1) -> dict:
    s0, s1 = loglog_slope(ps, err_r0), loglog_slope(ps, err_r1)
    return {"slope_r0": s0, "slope_r1": s1,
            "passed": SLOPE_R0[0] <= s0 <= SLOPE_R0[1] and s1 <= SLOPE_R1_MAX}


def extension_constant(ps, ratios, sup_kappa_half) -> dict:
    """Fit ratio / s - 1 = C / sqrt(p); C stable within 30% and the bound holding at every p."""
    ps = np.asarray(ps, float)
    x = 1 / np.sqrt(ps)
    y = np.asarray(ratios) / sup_kappa_half - 1
    c_fit = float(np.dot(x, y) / np.dot(x, x))
    c_p = y / x
    stable = bool(np.all(np.abs(c_p - c_fit) <= EXT_C_STABILITY * abs(c_fit)))
    bound = bool(np.all(np.asarray(ratios) <= sup_kappa_half * (1 + max(c_fit, 0.0) * x) + 1e-12))
    return {"C_fit": c_fit, "C_per_p": c_p.tolist(), "stable": stable, "bound_holds": bound,
            "passed": stable and bound}


def linf_constant(ps, ratios) -> dict:
    """Smallest C with ratio - 1 <= C / sqrt(p) on the p-list; finite means C <= LINF_C_MAX."""
    ps = np.asarray(ps, float)
    c_p = np.sqrt(ps) * np.maximum(np.asarray(ratios, float) - 1, 0.0)
    c = float(c_p.max())
    return {"C": c, "C_per_p": c_p.tolist(), "passed": bool(np.isfinite(c) and c <= LINF_C_MAX)}


def decay_constants(cs) -> dict:
    cs = np.asarray(cs, float)
    var = float((cs.max() - cs.min()) / cs.mean()) if len(cs) else float("nan")
    return {"c": cs.tolist(), "variation": var,
            "passed": bool(len(cs) and np.all(cs > 0) and var <= DECAY_VARIATION)}
