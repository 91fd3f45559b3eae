/** Client-side plan form validation mirroring the server's config rules.
 *
 * Submit stays disabled until every field passes; the rules here must stay
 * in lockstep with the engine's parse-then-validate checks so a form that
 * submits never bounces off the server with a 400.
 */

import type { PlanConfigDoc } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

export interface PlanFormState {
  horizonYears: string;
  initialWealth: string;
  targetWealth: string;
  u0Min: string;
  u0Max: string;
  xiMin: string;
  xiMax: string;
  confidenceLevels: string; // comma-separated, e.g. "3,5,7.5,10,15,20" (percent)
  riskFree: string;
  equityMean: string;
  equityVol: string;
  equityFraction: string;
  txnCost: string;
}

export const DEFAULT_FORM: PlanFormState = {
  horizonYears: "20",
  initialWealth: "500000",
  targetWealth: "2500000",
  u0Min: "10000",
  u0Max: "100000",
  xiMin: "2.5",
  xiMax: "5",
  confidenceLevels: "3, 5, 7.5, 10, 15, 20",
  riskFree: "2",
  equityMean: "7",
  equityVol: "33.33",
  equityFraction: "90",
  txnCost: "0",
};

function num(raw: string): number | null {
  const v = Number(raw.trim());
  return raw.trim() !== "" && Number.isFinite(v) ? v : null;
}

function pct(raw: string): number | null {
  const v = num(raw);
  return v === null ? null : v / 100;
}

export function validateForm(form: PlanFormState): FieldError[] {
  const errors: FieldError[] = [];
  const bad = (field: string, message: string) => errors.push({ field, message });

  const horizon = num(form.horizonYears);
  if (horizon === null || horizon <= 0) bad("horizonYears", "horizon must be > 0 years");

  const w0 = num(form.initialWealth);
  if (w0 === null || w0 <= 0) bad("initialWealth", "initial wealth must be > 0");
  const wT = num(form.targetWealth);
  if (wT === null || wT <= 0) bad("targetWealth", "target wealth must be > 0");

  const u0Min = num(form.u0Min);
  const u0Max = num(form.u0Max);
  if (u0Min === null || u0Min <= 0) {
    bad("u0Min", "minimum contribution must be > 0 (zero degenerates the model)");
  }
  if (u0Max === null || (u0Min !== null && u0Max < u0Min)) {
    bad("u0Max", "contribution bounds must be ordered");
  }

  const xiMin = pct(form.xiMin);
  const xiMax = pct(form.xiMax);
  if (xiMin === null || Math.abs(xiMin) >= 1) bad("xiMin", "growth rate must be a sane %/year");
  if (xiMax === null || (xiMin !== null && xiMax < xiMin)) {
    bad("xiMax", "growth-rate bounds must be ordered");
  }

  const levels = parseLevels(form.confidenceLevels);
  if (levels === null || levels.length === 0) {
    bad("confidenceLevels", "need at least one confidence level");
  } else if (levels.some((a) => a <= 0 || a >= 1)) {
    bad("confidenceLevels", "levels must be strictly between 0% and 100%");
  }

  const vol = pct(form.equityVol);
  if (vol === null || vol <= 0) bad("equityVol", "equity volatility must be > 0");
  const frac = pct(form.equityFraction);
  if (frac === null || frac < 0 || frac > 1) {
    bad("equityFraction", "equity fraction must be between 0% and 100%");
  }
  if (num(form.riskFree) === null) bad("riskFree", "risk-free rate must be a number");
  if (num(form.equityMean) === null) bad("equityMean", "equity mean must be a number");
  const nu = num(form.txnCost);
  if (nu === null || nu < 0) bad("txnCost", "transaction cost must be >= 0");

  return errors;
}

export function canSubmit(form: PlanFormState): boolean {
  return validateForm(form).length === 0;
}

function parseLevels(raw: string): number[] | null {
  const parts = raw.split(",").map((tok) => tok.trim()).filter((tok) => tok !== "");
  const out: number[] = [];
  for (const tok of parts) {
    const v = Number(tok);
    if (!Number.isFinite(v)) return null;
    out.push(v / 100);
  }
  return out;
}

/** Assemble the engine config document from a validated form. */
export function formToConfig(form: PlanFormState): PlanConfigDoc {
  if (!canSubmit(form)) throw new Error("formToConfig called on invalid form");
  return {
    plan: {
      horizon_years: Number(form.horizonYears),
      initial_wealth: Number(form.initialWealth),
      target_wealth: Number(form.targetWealth),
      u0_bounds: [Number(form.u0Min), Number(form.u0Max)],
      xi_bounds: [Number(form.xiMin) / 100, Number(form.xiMax) / 100],
      confidence_levels: parseLevels(form.confidenceLevels)!,
    },
    market: {
      risk_free: Number(form.riskFree) / 100,
      equity_mean: Number(form.equityMean) / 100,
      equity_vol: Number(form.equityVol) / 100,
      equity_fraction: Number(form.equityFraction) / 100,
      txn_cost: Number(form.txnCost),
    },
  };
}
