/** Page wiring: plan form, surface build button, frontier chart, what-if readout. */

import { ApiClient, SurfaceNotBuiltError } from "./api.js";
import {
  belowAllFrontiers,
  buildScene,
  nearestFrontiers,
  levelLabel,
  unproject,
  withinBounds,
  type VerticalAxis,
} from "./frontierView.js";
import { QueryQueue, pointKey } from "./queryQueue.js";
import { formatReadout, renderScene } from "./render.js";
import type { FrontiersResponse } from "./types.js";
import { DEFAULT_FORM, canSubmit, formToConfig, validateForm, type PlanFormState } from "./validation.js";

const WIDTH = 860;
const HEIGHT = 520;

interface AppState {
  planId: string | null;
  axis: VerticalAxis;
  frontiers: FrontiersResponse | null;
  form: PlanFormState;
  u0Bounds: [number, number];
}

export function startApp(root: HTMLElement, api: ApiClient = new ApiClient("")): void {
  const state: AppState = {
    planId: null,
    axis: "u0",
    frontiers: null,
    form: { ...DEFAULT_FORM },
    u0Bounds: [Number(DEFAULT_FORM.u0Min), Number(DEFAULT_FORM.u0Max)],
  };
  const doc = root.ownerDocument;

  root.innerHTML = `
    <section class="form-panel">
      <h2>Plan inputs</h2>
      <div id="form-fields"></div>
      <div id="form-errors" class="errors"></div>
      <button id="register" disabled>Register plan</button>
      <button id="build" disabled>Build surface</button>
      <span id="build-state"></span>
    </section>
    <section class="chart-panel">
      <h2>Efficient frontiers</h2>
      <label><input type="checkbox" id="axis-toggle" checked>
        vertical axis in dollars/year (uncheck for dimensionless y)</label>
      <div id="chart">surface not built yet</div>
      <div id="readout"></div>
      <div id="warnings" class="errors"></div>
    </section>`;

  const fields = root.querySelector("#form-fields") as HTMLElement;
  const errorsBox = root.querySelector("#form-errors") as HTMLElement;
  const registerBtn = root.querySelector("#register") as HTMLButtonElement;
  const buildBtn = root.querySelector("#build") as HTMLButtonElement;
  const buildState = root.querySelector("#build-state") as HTMLElement;
  const chart = root.querySelector("#chart") as HTMLElement;
  const readout = root.querySelector("#readout") as HTMLElement;
  const warnings = root.querySelector("#warnings") as HTMLElement;
  const axisToggle = root.querySelector("#axis-toggle") as HTMLInputElement;

  for (const [key, value] of Object.entries(state.form)) {
    const label = doc.createElement("label");
    label.textContent = key + " ";
    const input = doc.createElement("input");
    input.value = value;
    input.setAttribute("data-field", key);
    input.addEventListener("input", () => {
      (state.form as unknown as Record<string, string>)[key] = input.value;
      refreshValidation();
    });
    label.appendChild(input);
    fields.appendChild(label);
  }

  function refreshValidation(): void {
    const errs = validateForm(state.form);
    errorsBox.textContent = errs.map((e) => `${e.field}: ${e.message}`).join("; ");
    registerBtn.disabled = errs.length > 0;
    buildBtn.disabled = state.planId === null;
  }

  registerBtn.addEventListener("click", async () => {
    if (!canSubmit(state.form)) return;
    const config = formToConfig(state.form);
    state.u0Bounds = config.plan.u0_bounds;
    const res = await api.registerPlan(config);
    state.planId = res.plan_id;
    buildState.textContent = `plan ${res.plan_id} registered`;
    refreshValidation();
  });

  // surface builds are explicit: they cost seconds to minutes of solver time
  buildBtn.addEventListener("click", async () => {
    if (!state.planId) return;
    await api.startSurfaceBuild(state.planId);
    buildState.textContent = "building...";
    await pollFrontiers();
  });

  async function pollFrontiers(): Promise<void> {
    if (!state.planId) return;
    for (let attempt = 0; attempt < 600; attempt++) {
      try {
        state.frontiers = await api.getFrontiers(state.planId);
        buildState.textContent = "surface ready";
        drawChart();
        return;
      } catch (err) {
        if (err instanceof SurfaceNotBuiltError) {
          await new Promise((resolve) => setTimeout(resolve, 1000));
          continue;
        }
        buildState.textContent = `build failed: ${(err as Error).message}`;
        return;
      }
    }
  }

  const queue = new QueryQueue(async (key: string) => {
    const [u0, xi] = key.split("|").map(Number);
    if (!state.planId) throw new Error("no plan registered");
    return api.getProbability(state.planId, u0, xi);
  });

  async function whatIf(u0: number, xi: number): Promise<void> {
    const data = state.frontiers;
    if (!data) return;
    if (!withinBounds(data, state.u0Bounds, u0, xi)) {
      readout.textContent = formatReadout({ u0, xi, p: null, disabled: true });
      return;
    }
    readout.textContent = formatReadout({ u0, xi, p: null });
    const res = await queue.submit(pointKey(u0, xi));
    if (res === null) return; // stale
    const y = res.y0;
    let message: string | undefined;
    if (belowAllFrontiers(data, xi, y)) {
      message = "goal not met at any configured confidence";
    } else {
      const near = nearestFrontiers(data, xi, y)
        .filter((n) => n.gapY !== null)
        .sort((a, b) => Math.abs(a.gapY as number) - Math.abs(b.gapY as number))[0];
      if (near) message = `nearest frontier: ${levelLabel(near.level)}`;
    }
    readout.textContent = formatReadout({ u0, xi, p: res.p, message });
  }

  function drawChart(): void {
    const data = state.frontiers;
    if (!data) return;
    const scene = buildScene(data, state.axis, { width: WIDTH, height: HEIGHT, margin: 40 });
    const result = renderScene(scene, doc, WIDTH, HEIGHT, (curve, idx) => {
      const pt = curve.points[idx];
      // unproject: the scene keeps screen coords; for the click readout we
      // use the server polylines directly
      const entry = data.frontiers.find((f) => f.level === curve.level);
      if (!entry) return;
      const flat = entry.polylines.flat();
      const vertex = flat[Math.min(idx, flat.length - 1)];
      if (!vertex) return;
      const [xi, y] = vertex;
      void whatIf(data.axis_meta.u0_per_y * y, xi);
      void pt;
    });
    // hover: unproject the pointer into (xi, u0) and stream what-if queries
    // (rounded so the queue can coalesce repeats)
    result.svg.addEventListener("mousemove", (ev) => {
      const mouse = ev as MouseEvent;
      const { xi, u0 } = unproject(scene, { width: WIDTH, height: HEIGHT, margin: 40 },
        data.axis_meta.u0_per_y, mouse.offsetX, mouse.offsetY);
      void whatIf(Math.round(u0 / 100) * 100, Math.round(xi * 1e4) / 1e4);
    });
    chart.innerHTML = "";
    chart.appendChild(result.svg);
    warnings.textContent = scene.crossingWarnings.join("; ");
  }

  axisToggle.addEventListener("change", () => {
    state.axis = axisToggle.checked ? "u0" : "y";
    drawChart();
  });

  refreshValidation();
}

declare global {
  interface Window {
    morseplanStart?: typeof startApp;
  }
}

if (typeof window !== "undefined") {
  window.morseplanStart = startApp;
  const root = typeof document !== "undefined" ? document.getElementById("app") : null;
  if (root) startApp(root);
}
