/** SVG rendering of the frontier scene and the what-if readout.
 *
 * All numbers shown come from the server payloads; nothing is recomputed
 * client-side beyond linear screen projection.
 */

import type { FrontierScene, ScreenPolyline } from "./frontierView.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const PALETTE = [
  "#15607a", "#c03221", "#2e7d32", "#7b1fa2", "#e09f1f", "#455a64",
  "#9c2a5b", "#00838f",
];

export function colorForIndex(i: number): string {
  return PALETTE[i % PALETTE.length];
}

export interface RenderResult {
  svg: SVGElement;
  curveCount: number;
  labels: string[];
}

export function renderScene(
  scene: FrontierScene,
  doc: Document,
  width: number,
  height: number,
  onVertexClick?: (curve: ScreenPolyline, index: number) => void,
): RenderResult {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("data-axis", scene.axis);

  const labels: string[] = [];
  const levelColor = new Map<number, string>();
  scene.curves.forEach((curve) => {
    if (!levelColor.has(curve.level)) levelColor.set(curve.level, colorForIndex(levelColor.size));
  });

  for (const curve of scene.curves) {
    const path = doc.createElementNS(SVG_NS, "path");
    const d = curve.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(2)},${p.y.toFixed(2)}`)
      .join(" ");
    path.setAttribute("d", d);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", levelColor.get(curve.level) as string);
    path.setAttribute("stroke-width", "1.8");
    path.setAttribute("data-level", String(curve.level));
    path.setAttribute("class", "frontier-curve");
    svg.appendChild(path);

    if (onVertexClick) {
      curve.points.forEach((p, idx) => {
        const dot = doc.createElementNS(SVG_NS, "circle");
        dot.setAttribute("cx", p.x.toFixed(2));
        dot.setAttribute("cy", p.y.toFixed(2));
        dot.setAttribute("r", "3");
        dot.setAttribute("fill", "transparent");
        dot.setAttribute("class", "frontier-vertex");
        dot.addEventListener("click", () => onVertexClick(curve, idx));
        svg.appendChild(dot);
      });
    }

    const last = curve.points[curve.points.length - 1];
    if (last) {
      const text = doc.createElementNS(SVG_NS, "text");
      text.setAttribute("x", (last.x + 4).toFixed(2));
      text.setAttribute("y", last.y.toFixed(2));
      text.setAttribute("class", "frontier-label");
      text.setAttribute("fill", levelColor.get(curve.level) as string);
      text.textContent = curve.label;
      svg.appendChild(text);
      labels.push(curve.label);
    }
  }
  return { svg, curveCount: scene.curves.length, labels };
}

export interface ReadoutModel {
  u0: number;
  xi: number;
  p: number | null;
  message?: string;
  disabled?: boolean;
}

export function formatReadout(model: ReadoutModel): string {
  const u0 = `$${Math.round(model.u0).toLocaleString("en-US")}/yr`;
  const xi = `${(model.xi * 100).toFixed(2)}%/yr`;
  if (model.disabled) {
    return `${u0} @ ${xi}: outside admissible bounds${model.message ? ` (${model.message})` : ""}`;
  }
  if (model.p === null) {
    return `${u0} @ ${xi}: ...`;
  }
  const p = `${(model.p * 100).toFixed(2)}%`;
  return `${u0} @ ${xi}: shortfall probability ${p}${model.message ? ` — ${model.message}` : ""}`;
}
