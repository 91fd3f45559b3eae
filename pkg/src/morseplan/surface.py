"""Tail-probability surface over the (y, xi) control grid, bicubic
interpolation, constant-level frontier extraction, and satisficing queries.

The surface is built one xi column at a time (each column owns one
eigendecomposition); within a column every y node carries its own target
coordinate y_hat, so backward weights are per-node.  Frontier curves are
pulled from the fitted spline by marching squares on a refined lattice and
polished vertex-by-vertex with a one-dimensional root solve.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

from .model import MarketParams, PlanSpec, derive_params, y0_to_u0
from .serialize import config_hash
from .spectral import (
    DEFAULT_N,
    cached_decomposition,
    propagator,
    tail_kernel_weights,
    _weighted_laguerre_column,
)

__all__ = [
    "SolverConfig",
    "ControlGrid",
    "ProbabilitySurface",
    "BicubicInterpolant",
    "FrontierSet",
    "SolveResult",
    "build_surface",
    "fit_spline",
    "extract_frontiers",
    "solve_u0",
    "check_monotone_slices",
    "check_nesting",
]

ENGINE_VERSION = "0.1.0"


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs for the spectral surface pipeline."""

    N: int = DEFAULT_N
    q: float = 1.25
    y_count: int = 100
    xi_count: int = 20
    refine_factor: int = 8
    frontier_tol: float = 2e-3
    threads: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("SolverConfig: N must be >= 2")
        if self.y_count < 4 or self.xi_count < 4:
            raise ValueError("SolverConfig: grid needs at least 4 nodes per axis (bicubic)")
        if self.refine_factor < 1:
            raise ValueError("SolverConfig: refine_factor must be >= 1")


@dataclass(frozen=True)
class ControlGrid:
    """Log-spaced y nodes x linear xi nodes, tagged with input provenance."""

    y_nodes: np.ndarray = field(repr=False)
    xi_nodes: np.ndarray = field(repr=False)
    provenance: str = ""

    def __post_init__(self):
        for name, nodes in (("y_nodes", self.y_nodes), ("xi_nodes", self.xi_nodes)):
            if nodes.size < 4:
                raise ValueError(f"ControlGrid: {name} needs >= 4 entries")
            if not np.all(np.diff(nodes) > 0):
                raise ValueError(f"ControlGrid: {name} must be strictly increasing")
        if np.any(self.y_nodes <= 0):
            raise ValueError("ControlGrid: y nodes must be positive")

    @staticmethod
    def from_plan(plan: PlanSpec, market: MarketParams,
                  y_count: int = 100, xi_count: int = 20) -> "ControlGrid":
        """Grid bounds from the plan's admissible controls via the y0 map."""
        hbar = market.sigma ** 2
        y_lo = 2.0 * plan.u0_bounds[0] / (hbar * plan.initial_wealth)
        y_hi = 2.0 * plan.u0_bounds[1] / (hbar * plan.initial_wealth)
        if not y_hi > y_lo:
            raise ValueError("ControlGrid.from_plan: degenerate u0 bounds")
        xi_lo, xi_hi = plan.xi_bounds
        if not xi_hi > xi_lo:
            raise ValueError("ControlGrid.from_plan: degenerate xi bounds")
        prov = config_hash({
            "plan": plan.__dict__, "market": market.__dict__,
            "y_count": y_count, "xi_count": xi_count,
        })
        return ControlGrid(
            y_nodes=np.exp(np.linspace(math.log(y_lo), math.log(y_hi), y_count)),
            xi_nodes=np.linspace(xi_lo, xi_hi, xi_count),
            provenance=prov,
        )


@dataclass(frozen=True)
class ProbabilitySurface:
    """p(y, 0 | xi) over the grid: clamped consumer view plus raw values."""

    grid: ControlGrid
    p_values: np.ndarray = field(repr=False)     # clamped to [0, 1]
    raw_values: np.ndarray = field(repr=False)
    meta: dict = field(compare=False, default_factory=dict)

    @property
    def shape(self):
        return self.p_values.shape


class SurfaceBuildError(RuntimeError):
    """A whole xi column failed to evaluate."""


def _column_values(plan: PlanSpec, market: MarketParams, xi: float,
                   y_nodes: np.ndarray, config: SolverConfig) -> np.ndarray:
    """Raw p(y, 0) for one xi column."""
    params = derive_params(market, xi, config.q)
    basis, decomp = cached_decomposition(params.s, config.q, config.N, params.branch)
    prop = propagator(decomp, plan.horizon_years, params.hbar)
    scale = plan.initial_wealth * math.exp(xi * plan.horizon_years) / plan.target_wealth
    order = params.tail_kernel_order
    out = np.empty(y_nodes.size)
    for j, y0 in enumerate(y_nodes):
        wb0 = tail_kernel_weights(basis, y0 * scale, order)
        eval_col = _weighted_laguerre_column(basis, y0, basis.q - params.s)
        out[j] = float(eval_col @ (prop @ wb0))
    return out


def build_surface(plan: PlanSpec, market: MarketParams, grid: ControlGrid,
                  config: SolverConfig = SolverConfig()) -> ProbabilitySurface:
    """Evaluate the tail probability at every grid node.

    Pre-validates every xi column's parameter gates before spending any
    solver time.  Per-node failures are recorded with their coordinates in
    the surface meta; a column with no surviving nodes aborts the build.
    """
    t0 = time.time()
    for xi in grid.xi_nodes:
        derive_params(market, float(xi), config.q).gates.raise_if_failed()

    raw = np.full((grid.y_nodes.size, grid.xi_nodes.size), np.nan)
    failures: list[dict] = []

    def run_column(ix: int):
        xi = float(grid.xi_nodes[ix])
        try:
            raw[:, ix] = _column_values(plan, market, xi, grid.y_nodes, config)
        except Exception as exc:
            failures.append({"xi_index": ix, "xi": xi, "error": str(exc)})

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(run_column, range(grid.xi_nodes.size)))
    else:
        for ix in range(grid.xi_nodes.size):
            run_column(ix)

    dead_cols = [f["xi_index"] for f in failures]
    if dead_cols:
        raise SurfaceBuildError(f"surface build failed for xi columns {sorted(dead_cols)}: {failures}")

    clamped = np.clip(raw, 0.0, 1.0)
    meta = {
        "N": config.N,
        "q": config.q,
        "engine_version": ENGINE_VERSION,
        "built_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "build_seconds": round(time.time() - t0, 3),
        "provenance": grid.provenance,
        "failures": failures,
        "raw_range": [float(np.min(raw)), float(np.max(raw))],
    }
    return ProbabilitySurface(grid=grid, p_values=clamped, raw_values=raw, meta=meta)


class BicubicInterpolant:
    """Tensor-product interpolating cubic spline over the control grid.

    Interpolation runs in (log y, xi) coordinates to mirror the log-spaced
    grid.  The FITPACK interpolating spline reproduces grid nodes to
    round-off and is exact on bicubic polynomials.
    """

    def __init__(self, grid: ControlGrid, values: np.ndarray):
        if values.shape != (grid.y_nodes.size, grid.xi_nodes.size):
            raise ValueError("BicubicInterpolant: value shape does not match grid")
        self.grid = grid
        self._logy = np.log(grid.y_nodes)
        self._spline = RectBivariateSpline(self._logy, grid.xi_nodes, values, kx=3, ky=3, s=0)

    def evaluate(self, y, xi):
        """Interpolated p at scalar or array (y, xi)."""
        y = np.asarray(y, dtype=float)
        xi = np.asarray(xi, dtype=float)
        scalar = y.ndim == 0 and xi.ndim == 0
        out = self._spline.ev(np.log(y), xi)
        return float(out) if scalar else out

    def evaluate_grid(self, y_nodes: np.ndarray, xi_nodes: np.ndarray) -> np.ndarray:
        """Values on the outer product of the given axes."""
        return self._spline(np.log(np.asarray(y_nodes, dtype=float)),
                            np.asarray(xi_nodes, dtype=float))

    @property
    def y_bounds(self):
        return float(self.grid.y_nodes[0]), float(self.grid.y_nodes[-1])

    @property
    def xi_bounds(self):
        return float(self.grid.xi_nodes[0]), float(self.grid.xi_nodes[-1])


def fit_spline(surface: ProbabilitySurface) -> BicubicInterpolant:
    """Fit the consumer (clamped) surface with the bicubic interpolant."""
    return BicubicInterpolant(surface.grid, surface.p_values)


@dataclass(frozen=True)
class FrontierSet:
    """Constant-level polylines: per level an ordered list of (xi, y) vertices."""

    levels: tuple[float, ...]
    polylines: dict = field(repr=False)   # level -> list[np.ndarray (m, 2)] of (xi, y)
    residuals: dict = field(repr=False)   # level -> list[np.ndarray (m,)]
    empty_levels: tuple[float, ...] = ()


def _marching_segments(P: np.ndarray, X: np.ndarray, Y: np.ndarray, level: float):
    """Marching squares on lattice values P over axes Y (rows) x X (cols).

    Returns line segments as ((x1, y1), (x2, y2)) tuples.  The saddle case
    is disambiguated by the cell-center average.
    """
    segs = []
    F = P - level
    ny, nx = F.shape
    for i in range(ny - 1):
        for j in range(nx - 1):
            f00, f01 = F[i, j], F[i, j + 1]
            f10, f11 = F[i + 1, j], F[i + 1, j + 1]
            idx = (f00 > 0) | ((f01 > 0) << 1) | ((f11 > 0) << 2) | ((f10 > 0) << 3)
            if idx in (0, 15):
                continue
            y0v, y1v = Y[i], Y[i + 1]
            x0v, x1v = X[j], X[j + 1]

            def interp(fa, fb, a, b):
                t = fa / (fa - fb)
                return a + t * (b - a)

            pts = {}
            if (f00 > 0) != (f01 > 0):
                pts["top"] = (interp(f00, f01, x0v, x1v), y0v)
            if (f10 > 0) != (f11 > 0):
                pts["bottom"] = (interp(f10, f11, x0v, x1v), y1v)
            if (f00 > 0) != (f10 > 0):
                pts["left"] = (x0v, interp(f00, f10, y0v, y1v))
            if (f01 > 0) != (f11 > 0):
                pts["right"] = (x1v, interp(f01, f11, y0v, y1v))
            edges = list(pts.keys())
            if len(edges) == 2:
                segs.append((pts[edges[0]], pts[edges[1]]))
            elif len(edges) == 4:
                center = 0.25 * (f00 + f01 + f10 + f11)
                if (center > 0) == (f00 > 0):
                    segs.append((pts["top"], pts["right"]))
                    segs.append((pts["bottom"], pts["left"]))
                else:
                    segs.append((pts["top"], pts["left"]))
                    segs.append((pts["bottom"], pts["right"]))
    return segs


def _chain_segments(segs, tol: float):
    """Join shared-endpoint segments into ordered polylines."""
    if not segs:
        return []

    def key(p):
        return (round(p[0] / tol), round(p[1] / tol))

    adj: dict = {}
    for si, (a, b) in enumerate(segs):
        adj.setdefault(key(a), []).append((si, b))
        adj.setdefault(key(b), []).append((si, a))

    used = set()
    chains = []
    for si, (a, b) in enumerate(segs):
        if si in used:
            continue
        used.add(si)
        chain = [a, b]
        for forward in (True, False):
            cur = chain[-1] if forward else chain[0]
            while True:
                nxt = None
                for sj, other in adj.get(key(cur), ()):
                    if sj not in used:
                        used.add(sj)
                        nxt = other
                        break
                if nxt is None:
                    break
                if forward:
                    chain.append(nxt)
                else:
                    chain.insert(0, nxt)
                cur = nxt
        chains.append(np.array(chain))
    return chains


def extract_frontiers(interp: BicubicInterpolant, levels, config: SolverConfig = SolverConfig(),
                      ) -> FrontierSet:
    """Constant-probability polylines at each requested level.

    Marching squares runs on a lattice refined ``refine_factor`` times over
    the grid density (in log y); every vertex is then polished by a root
    solve along its steeper grid direction until |p - level| is within
    ``frontier_tol``.  Levels outside the surface range come back empty and
    are reported as such.
    """
    grid = interp.grid
    ref = config.refine_factor
    logy = np.linspace(math.log(grid.y_nodes[0]), math.log(grid.y_nodes[-1]),
                       (grid.y_nodes.size - 1) * ref + 1)
    xis = np.linspace(grid.xi_nodes[0], grid.xi_nodes[-1],
                      (grid.xi_nodes.size - 1) * ref + 1)
    y_lattice = np.exp(logy)
    P = interp.evaluate_grid(y_lattice, xis)

    polylines: dict = {}
    residuals: dict = {}
    empty = []
    for level in levels:
        segs = _marching_segments(P, xis, y_lattice, float(level))
        chains = _chain_segments(segs, tol=1e-9)
        if not chains:
            empty.append(float(level))
            polylines[float(level)] = []
            residuals[float(level)] = []
            continue
        pls = []
        ress = []
        for chain in chains:
            pol = np.array([_polish_vertex(interp, x, y, float(level), config.frontier_tol)
                            for (x, y) in chain])
            res = np.abs(interp.evaluate(pol[:, 1], pol[:, 0]) - float(level))
            pls.append(pol)
            ress.append(res)
        polylines[float(level)] = pls
        residuals[float(level)] = ress
    return FrontierSet(levels=tuple(float(l) for l in levels), polylines=polylines,
                       residuals=residuals, empty_levels=tuple(empty))


def _polish_vertex(interp: BicubicInterpolant, xi: float, y: float, level: float,
                   tol: float):
    """Move a vertex along its steeper grid-aligned direction onto the level set."""
    y_lo, y_hi = interp.y_bounds
    xi_lo, xi_hi = interp.xi_bounds
    h_y = (math.log(y_hi) - math.log(y_lo)) * 1e-4
    h_x = (xi_hi - xi_lo) * 1e-4
    y_p = min(y * math.exp(h_y), y_hi)
    y_m = max(y * math.exp(-h_y), y_lo)
    dp_dy = (interp.evaluate(y_p, xi) - interp.evaluate(y_m, xi))
    x_p = min(xi + h_x, xi_hi)
    x_m = max(xi - h_x, xi_lo)
    dp_dx = (interp.evaluate(y, x_p) - interp.evaluate(y, x_m))

    if abs(interp.evaluate(y, xi) - level) <= tol:
        return (xi, y)
    if abs(dp_dy) >= abs(dp_dx):
        # bracket along y around the current vertex
        span = (math.log(y_hi) - math.log(y_lo)) / 50.0
        for width in (span, 4 * span, 16 * span):
            a = max(math.log(y) - width, math.log(y_lo))
            b = min(math.log(y) + width, math.log(y_hi))
            fa = interp.evaluate(math.exp(a), xi) - level
            fb = interp.evaluate(math.exp(b), xi) - level
            if fa == 0.0:
                return (xi, math.exp(a))
            if fb == 0.0:
                return (xi, math.exp(b))
            if fa * fb < 0:
                root = brentq(lambda ly: interp.evaluate(math.exp(ly), xi) - level, a, b,
                              xtol=1e-12)
                return (xi, math.exp(root))
    else:
        span = (xi_hi - xi_lo) / 50.0
        for width in (span, 4 * span, 16 * span):
            a = max(xi - width, xi_lo)
            b = min(xi + width, xi_hi)
            fa = interp.evaluate(y, a) - level
            fb = interp.evaluate(y, b) - level
            if fa == 0.0:
                return (a, y)
            if fb == 0.0:
                return (b, y)
            if fa * fb < 0:
                root = brentq(lambda x: interp.evaluate(y, x) - level, a, b, xtol=1e-14)
                return (root, y)
    return (xi, y)  # no bracket found; keep the marching-squares vertex


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a satisficing query along one xi slice."""

    u0: float | None
    y0: float | None
    status: str  # "ok" | "infeasible" | "already_satisfied"
    residual: float = math.nan


def solve_u0(interp: BicubicInterpolant, plan: PlanSpec, market: MarketParams,
             xi: float, alpha: float) -> SolveResult:
    """Contribution rate whose tail probability equals alpha at growth rate xi.

    Bisects the (monotone-decreasing) y slice of the interpolated surface.
    Returns status "infeasible" when even the largest admissible contribution
    leaves p above alpha, and "already_satisfied" when the smallest
    admissible contribution is already below alpha.
    """
    xi_lo, xi_hi = interp.xi_bounds
    if not xi_lo <= xi <= xi_hi:
        raise ValueError(f"solve_u0: xi = {xi} outside surface range [{xi_lo}, {xi_hi}]")
    y_lo, y_hi = interp.y_bounds
    p_lo_y = interp.evaluate(y_lo, xi)   # largest p on the slice
    p_hi_y = interp.evaluate(y_hi, xi)   # smallest p on the slice
    if alpha > p_lo_y:
        return SolveResult(u0=None, y0=None, status="already_satisfied")
    if alpha < p_hi_y:
        return SolveResult(u0=None, y0=None, status="infeasible")
    root = brentq(lambda ly: interp.evaluate(math.exp(ly), xi) - alpha,
                  math.log(y_lo), math.log(y_hi), xtol=1e-12)
    y0 = math.exp(root)
    hbar = market.sigma ** 2
    u0 = y0_to_u0(y0, plan.initial_wealth, hbar)
    return SolveResult(u0=u0, y0=y0, status="ok",
                       residual=abs(interp.evaluate(y0, xi) - alpha))


def check_monotone_slices(surface: ProbabilitySurface, tol: float = 2e-3):
    """Nodes where p increases along y or xi beyond tolerance (should be none)."""
    p = surface.p_values
    bad = []
    dy = np.diff(p, axis=0)
    for i, j in zip(*np.where(dy > tol)):
        bad.append({"axis": "y", "y_index": int(i), "xi_index": int(j), "jump": float(dy[i, j])})
    dx = np.diff(p, axis=1)
    for i, j in zip(*np.where(dx > tol)):
        bad.append({"axis": "xi", "y_index": int(i), "xi_index": int(j), "jump": float(dx[i, j])})
    return bad


def check_nesting(frontiers: FrontierSet, n_samples: int = 33):
    """Verify lower-level polylines sit weakly above higher-level ones.

    Lower alpha demands larger contributions, hence larger y at the same xi.
    Returns a list of violations (empty when properly nested).
    """
    levels = sorted(l for l in frontiers.levels if frontiers.polylines.get(l))
    violations = []
    for a_lo, a_hi in zip(levels, levels[1:]):
        for pls_lo in frontiers.polylines[a_lo]:
            for pls_hi in frontiers.polylines[a_hi]:
                xi_min = max(pls_lo[:, 0].min(), pls_hi[:, 0].min())
                xi_max = min(pls_lo[:, 0].max(), pls_hi[:, 0].max())
                if xi_min >= xi_max:
                    continue
                for xi in np.linspace(xi_min, xi_max, n_samples):
                    y_lo_line = np.interp(xi, pls_lo[:, 0], pls_lo[:, 1])
                    y_hi_line = np.interp(xi, pls_hi[:, 0], pls_hi[:, 1])
                    if y_lo_line < y_hi_line * (1.0 - 1e-6):
                        violations.append({"alpha_low": a_lo, "alpha_high": a_hi,
                                           "xi": float(xi), "y_low": float(y_lo_line),
                                           "y_high": float(y_hi_line)})
    return violations
