"""Query payload builders shared by the CLI and the HTTP service.

Both front ends call these functions and serialize the returned dicts with
canonical_json, which is what makes their answers bitwise identical.
"""

from __future__ import annotations

import math

import numpy as np

from ..diagnostics import norm_residual_estimate, probability_current, total_norm
from ..model import control_point, derive_params
from ..mc_oracle import SimConfig, simulate_tail, simulate_tail_verhulst
from ..spectral import (
    backward_initial_weights,
    cached_decomposition,
    evolve,
    forward_initial_weights,
    bke_tail_probability,
)
from ..surface import (
    BicubicInterpolant,
    ControlGrid,
    build_surface,
    extract_frontiers,
    fit_spline,
    solve_u0,
)
from .archive import SurfaceArchive
from .config import PlanConfig
from ..surface import ENGINE_VERSION

__all__ = [
    "probability_payload",
    "solve_payload",
    "frontiers_payload",
    "surface_payload",
    "mc_payload",
    "diagnose_payload",
    "build_archive",
]


def probability_payload(config: PlanConfig, u0: float, xi: float) -> dict:
    """Point query: tail probability for one policy, directly spectral."""
    plan, market, solver = config.plan, config.market, config.solver
    params = derive_params(market, xi, solver.q)
    params.gates.raise_if_failed()
    point = control_point(plan, params, u0)
    basis, decomp = cached_decomposition(params.s, solver.q, solver.N, params.branch)
    wb = backward_initial_weights(basis, point, params)
    wb_T = evolve(wb, decomp, plan.horizon_years, params.hbar)
    raw = bke_tail_probability(basis, wb_T, params, point.y0)
    return {
        "engine_version": ENGINE_VERSION,
        "u0": u0,
        "xi": xi,
        "y0": point.y0,
        "y_hat": point.y_hat,
        "p": min(max(raw, 0.0), 1.0),
        "p_raw": raw,
        "N": solver.N,
        "q": solver.q,
    }


def build_archive(config: PlanConfig, with_frontiers: bool = True) -> SurfaceArchive:
    """Full surface build (plus frontier extraction) for a plan config."""
    plan, market, solver = config.plan, config.market, config.solver
    grid = ControlGrid.from_plan(plan, market, solver.y_count, solver.xi_count)
    surface = build_surface(plan, market, grid, solver)
    frontiers = None
    if with_frontiers:
        interp = fit_spline(surface)
        frontiers = extract_frontiers(interp, plan.confidence_levels, solver)
    return SurfaceArchive(config=config, surface=surface, frontiers=frontiers)


def surface_payload(archive: SurfaceArchive) -> dict:
    surf = archive.surface
    return {
        "engine_version": ENGINE_VERSION,
        "grid": {
            "y_nodes": surf.grid.y_nodes.tolist(),
            "xi_nodes": surf.grid.xi_nodes.tolist(),
            "provenance": surf.grid.provenance,
        },
        "p_values": surf.p_values.tolist(),
        "raw_range": surf.meta.get("raw_range"),
        "meta": {k: surf.meta[k] for k in ("N", "q", "built_at", "build_seconds")
                 if k in surf.meta},
    }


def frontiers_payload(archive: SurfaceArchive, levels=None) -> dict:
    """Frontier polylines; recomputed when custom levels are requested."""
    config = archive.config
    want = tuple(float(l) for l in levels) if levels is not None else None
    if archive.frontiers is not None and want in (None, archive.frontiers.levels):
        fs = archive.frontiers
    else:
        interp = fit_spline(archive.surface)
        fs = extract_frontiers(interp, want or config.plan.confidence_levels, config.solver)
    out_levels = []
    for level in fs.levels:
        pls = fs.polylines.get(level, [])
        out_levels.append({
            "level": level,
            "polylines": [pol.tolist() for pol in pls],
            "residual_max": (max((float(np.max(r)) for r in fs.residuals.get(level, [])
                                  if len(r)), default=None)),
        })
    hbar = config.market.sigma ** 2
    return {
        "engine_version": ENGINE_VERSION,
        "levels": list(fs.levels),
        "empty_levels": list(fs.empty_levels),
        "frontiers": out_levels,
        "axis_meta": {
            "hbar": hbar,
            "initial_wealth": config.plan.initial_wealth,
            "u0_per_y": 0.5 * hbar * config.plan.initial_wealth,
            "xi_bounds": list(config.plan.xi_bounds),
        },
    }


def solve_payload(archive: SurfaceArchive, xi: float, alpha: float,
                  interp: BicubicInterpolant | None = None) -> dict:
    config = archive.config
    if interp is None:
        interp = fit_spline(archive.surface)
    result = solve_u0(interp, config.plan, config.market, xi, alpha)
    return {
        "engine_version": ENGINE_VERSION,
        "xi": xi,
        "alpha": alpha,
        "status": result.status,
        "u0": result.u0,
        "y0": result.y0,
        "residual": None if math.isnan(result.residual) else result.residual,
    }


def mc_payload(config: PlanConfig, u0: float, xi: float, n_paths: int = 200_000,
               seed: int = 0, steps_per_year: int = 252,
               coordinate: str = "wealth", threads: int = 1) -> dict:
    sim = SimConfig(n_paths=n_paths, steps_per_year=steps_per_year, seed=seed,
                    coordinate=coordinate, threads=threads)
    runner = simulate_tail if coordinate == "wealth" else simulate_tail_verhulst
    est = runner(config.plan, config.market, u0, xi, sim)
    return {
        "engine_version": ENGINE_VERSION,
        "u0": u0,
        "xi": xi,
        "coordinate": coordinate,
        "n_paths": est.n_paths,
        "steps_per_year": steps_per_year,
        "seed": seed,
        "p_hat": est.p_hat,
        "std_error": est.std_error,
    }


def diagnose_payload(config: PlanConfig, u0: float | None = None,
                     xi: float | None = None) -> dict:
    """Structured truncation-health report for one policy point."""
    plan, market, solver = config.plan, config.market, config.solver
    if xi is None:
        xi = 0.5 * (plan.xi_bounds[0] + plan.xi_bounds[1])
    if u0 is None:
        u0 = math.sqrt(plan.u0_bounds[0] * plan.u0_bounds[1])
    params = derive_params(market, xi, solver.q)
    point = control_point(plan, params, u0)
    gates = {
        "series_convergence": params.gates.series_convergence,
        "norm_expansion": params.gates.norm_expansion,
        "vanishing_current": params.gates.vanishing_current,
        "messages": list(params.gates.messages),
    }
    report: dict = {
        "engine_version": ENGINE_VERSION,
        "u0": u0,
        "xi": xi,
        "params": {"rbar": params.rbar, "sigma": params.sigma, "hbar": params.hbar,
                   "eta": params.eta, "s": params.s, "g": params.g, "q": params.q,
                   "kappa": params.kappa, "tail_kernel_order": params.tail_kernel_order,
                   "y0": point.y0, "y_hat": point.y_hat},
        "gates": gates,
    }
    if not params.gates.all_pass:
        return report

    basis, decomp = cached_decomposition(params.s, solver.q, solver.N, params.branch)
    wf = forward_initial_weights(basis, point, params)
    wf_T = evolve(wf, decomp, plan.horizon_years, params.hbar)
    norm_T = total_norm(basis, wf_T, params, y0=point.y0)
    wb = backward_initial_weights(basis, point, params)
    wb_T = evolve(wb, decomp, plan.horizon_years, params.hbar)
    duality = float(wf.values @ wb_T.values)
    y_small = point.y0 * 1e-3
    report.update({
        "norm_T": norm_T.total_norm,
        "norm_residual_estimate_t0": norm_residual_estimate(point.y0, solver.N, params),
        "duality_product": duality,
        "current_near_origin": probability_current(basis, wf_T, params, y_small),
        "current_at_y0": probability_current(basis, wf_T, params, point.y0),
        "backward_weight_decay": _decay_fit(wb_T.values),
    })
    return report


def _decay_fit(values: np.ndarray) -> dict:
    """Least-squares a*exp(-b n) + c fit of a weight tail (monitoring only)."""
    w = np.asarray(values)
    n = np.arange(w.size)
    c = float(w[-10:].mean())
    resid = np.abs(w - c)
    mask = resid > 1e-300
    if mask.sum() < 3:
        return {"a": 0.0, "b": 0.0, "c": c}
    coeffs = np.polyfit(n[mask][: w.size // 2], np.log(resid[mask][: w.size // 2]), 1)
    return {"a": float(np.exp(coeffs[1])), "b": float(-coeffs[0]), "c": c}
