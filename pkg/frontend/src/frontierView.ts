/** Frontier view model: pure geometry and state, no DOM.
 *
 * The engine serves polylines in (xi, y) coordinates.  The vertical axis is
 * toggleable between the dimensionless y and dollars/year u0; the map is the
 * linear rescale u0 = u0_per_y * y served in axis_meta, so toggling relabels
 * the axis without touching curve topology.
 */

import type { FrontiersResponse } from "./types.js";

export type VerticalAxis = "u0" | "y";

export interface ViewBox {
  width: number;
  height: number;
  margin: number;
}

export interface ScreenPolyline {
  level: number;
  label: string;
  points: { x: number; y: number }[];
}

export interface FrontierScene {
  curves: ScreenPolyline[];
  axis: VerticalAxis;
  xiRange: [number, number];
  verticalRange: [number, number];
  crossingWarnings: string[];
}

export function verticalValue(y: number, axis: VerticalAxis, u0PerY: number): number {
  return axis === "u0" ? u0PerY * y : y;
}

export function levelLabel(level: number): string {
  const pct = level * 100;
  const text = Number.isInteger(pct) ? pct.toFixed(0) : String(pct);
  return `${text}%`;
}

/** Project server polylines into screen space for the chosen vertical axis. */
export function buildScene(
  data: FrontiersResponse,
  axis: VerticalAxis,
  box: ViewBox,
): FrontierScene {
  const u0PerY = data.axis_meta.u0_per_y;
  const nonEmpty = data.frontiers.filter((f) => f.polylines.length > 0);
  const allY = nonEmpty.flatMap((f) => f.polylines.flatMap((pl) => pl.map(([, y]) => y)));
  const allXi = nonEmpty.flatMap((f) => f.polylines.flatMap((pl) => pl.map(([xi]) => xi)));
  const xiRange: [number, number] =
    allXi.length > 0
      ? [Math.min(...allXi), Math.max(...allXi)]
      : [data.axis_meta.xi_bounds[0], data.axis_meta.xi_bounds[1]];
  const yMin = allY.length ? Math.min(...allY) : 0;
  const yMax = allY.length ? Math.max(...allY) : 1;
  const vRange: [number, number] = [
    verticalValue(yMin, axis, u0PerY),
    verticalValue(yMax, axis, u0PerY),
  ];

  const { width, height, margin } = box;
  const spanX = Math.max(xiRange[1] - xiRange[0], 1e-12);
  const spanV = Math.max(vRange[1] - vRange[0], 1e-12);
  const toX = (xi: number) => margin + ((xi - xiRange[0]) / spanX) * (width - 2 * margin);
  const toY = (v: number) => height - margin - ((v - vRange[0]) / spanV) * (height - 2 * margin);

  const curves: ScreenPolyline[] = [];
  for (const entry of nonEmpty) {
    for (const pl of entry.polylines) {
      curves.push({
        level: entry.level,
        label: levelLabel(entry.level),
        points: pl.map(([xi, y]) => ({
          x: toX(xi),
          y: toY(verticalValue(y, axis, u0PerY)),
        })),
      });
    }
  }
  return {
    curves,
    axis,
    xiRange,
    verticalRange: vRange,
    crossingWarnings: findCrossings(data),
  };
}

/** Lower-alpha frontiers must sit weakly above higher-alpha ones.
 *
 * The server is the source of truth; a crossing signals a data bug, so the
 * view surfaces it as a warning instead of silently drawing nonsense.
 */
export function findCrossings(data: FrontiersResponse): string[] {
  const warnings: string[] = [];
  const sorted = [...data.frontiers]
    .filter((f) => f.polylines.length > 0)
    .sort((a, b) => a.level - b.level);
  for (let i = 0; i + 1 < sorted.length; i++) {
    const lo = sorted[i];
    const hi = sorted[i + 1];
    for (const plLo of lo.polylines) {
      for (const plHi of hi.polylines) {
        const xiLo = plLo.map(([xi]) => xi);
        const xiHi = plHi.map(([xi]) => xi);
        const a = Math.max(Math.min(...xiLo), Math.min(...xiHi));
        const b = Math.min(Math.max(...xiLo), Math.max(...xiHi));
        if (a >= b) continue;
        for (let k = 0; k <= 16; k++) {
          const xi = a + ((b - a) * k) / 16;
          const yLo = interpolateY(plLo, xi);
          const yHi = interpolateY(plHi, xi);
          if (yLo !== null && yHi !== null && yLo < yHi * (1 - 1e-9)) {
            warnings.push(
              `frontier ${levelLabel(lo.level)} dips below ${levelLabel(hi.level)} near xi=${xi.toFixed(4)}`,
            );
            k = 17; // one warning per pair
          }
        }
      }
    }
  }
  return warnings;
}

export function interpolateY(polyline: [number, number][], xi: number): number | null {
  if (polyline.length === 0) return null;
  const pts = [...polyline].sort((p, q) => p[0] - q[0]);
  if (xi < pts[0][0] || xi > pts[pts.length - 1][0]) return null;
  for (let i = 0; i + 1 < pts.length; i++) {
    const [x0, y0] = pts[i];
    const [x1, y1] = pts[i + 1];
    if (xi >= x0 && xi <= x1) {
      if (x1 === x0) return y0;
      const t = (xi - x0) / (x1 - x0);
      return y0 + t * (y1 - y0);
    }
  }
  return pts[pts.length - 1][1];
}

export interface NearestFrontier {
  level: number;
  /** vertical gap (in y units) from the query point to the frontier at its xi */
  gapY: number | null;
}

/** Distance from a what-if point to each configured frontier at the same xi. */
export function nearestFrontiers(
  data: FrontiersResponse,
  xi: number,
  y: number,
): NearestFrontier[] {
  return data.frontiers.map((entry) => {
    let best: number | null = null;
    for (const pl of entry.polylines) {
      const fy = interpolateY(pl, xi);
      if (fy === null) continue;
      const gap = y - fy;
      if (best === null || Math.abs(gap) < Math.abs(best)) best = gap;
    }
    return { level: entry.level, gapY: best };
  });
}

/** True when the point falls below every configured frontier (larger failure
 * probability than the loosest configured level). */
export function belowAllFrontiers(data: FrontiersResponse, xi: number, y: number): boolean {
  const gaps = nearestFrontiers(data, xi, y).filter((g) => g.gapY !== null);
  return gaps.length > 0 && gaps.every((g) => (g.gapY as number) < 0);
}

export function withinBounds(
  data: FrontiersResponse,
  u0Bounds: [number, number],
  u0: number,
  xi: number,
): boolean {
  const [xiLo, xiHi] = data.axis_meta.xi_bounds;
  return u0 >= u0Bounds[0] && u0 <= u0Bounds[1] && xi >= xiLo && xi <= xiHi;
}

/** Screen position back to (xi, u0): inverse of the scene projection. */
export function unproject(
  scene: FrontierScene,
  box: ViewBox,
  u0PerY: number,
  px: number,
  py: number,
): { xi: number; u0: number } {
  const { width, height, margin } = box;
  const tx = (px - margin) / Math.max(width - 2 * margin, 1e-12);
  const ty = (height - margin - py) / Math.max(height - 2 * margin, 1e-12);
  const xi = scene.xiRange[0] + tx * (scene.xiRange[1] - scene.xiRange[0]);
  const v = scene.verticalRange[0] + ty * (scene.verticalRange[1] - scene.verticalRange[0]);
  const u0 = scene.axis === "u0" ? v : v * u0PerY;
  return { xi, u0 };
}
