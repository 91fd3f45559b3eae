/** Shared wire types mirroring the engine's JSON payloads. */

export interface PlanSection {
  horizon_years: number;
  initial_wealth: number;
  target_wealth: number;
  u0_bounds: [number, number];
  xi_bounds: [number, number];
  confidence_levels: number[];
}

export interface MarketSection {
  risk_free: number;
  equity_mean: number;
  equity_vol: number;
  equity_fraction: number;
  txn_cost: number;
}

export interface PlanConfigDoc {
  plan: PlanSection;
  market: MarketSection;
  solver?: Record<string, number>;
}

export interface FrontierEntry {
  level: number;
  /** polyline vertices as [xi, y] pairs */
  polylines: [number, number][][];
  residual_max: number | null;
}

export interface FrontiersResponse {
  engine_version: string;
  levels: number[];
  empty_levels: number[];
  frontiers: FrontierEntry[];
  axis_meta: {
    hbar: number;
    initial_wealth: number;
    u0_per_y: number;
    xi_bounds: [number, number];
  };
}

export interface ProbabilityResponse {
  engine_version: string;
  u0: number;
  xi: number;
  y0: number;
  y_hat: number;
  p: number;
  p_raw: number;
  N: number;
  q: number;
}

export interface RegisterResponse {
  plan_id: string;
  engine_version: string;
}

export interface JobResponse {
  plan_id: string;
  job_id: string;
  state: string;
}
