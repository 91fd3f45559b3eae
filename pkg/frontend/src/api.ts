/** Typed client for the planning engine's HTTP API.
 *
 * The 409 "surface not yet built" state is surfaced as a distinct error so
 * views can render a build-pending placeholder instead of a failure.
 */

import type {
  FrontiersResponse,
  JobResponse,
  PlanConfigDoc,
  ProbabilityResponse,
  RegisterResponse,
} from "./types.js";

export class SurfaceNotBuiltError extends Error {
  constructor() {
    super("surface not yet built");
    this.name = "SurfaceNotBuiltError";
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (res.status === 409) throw new SurfaceNotBuiltError();
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = (await res.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  registerPlan(doc: PlanConfigDoc): Promise<RegisterResponse> {
    return this.request<RegisterResponse>("/plans", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  startSurfaceBuild(planId: string): Promise<JobResponse> {
    return this.request<JobResponse>(`/plans/${planId}/surface`, { method: "POST" });
  }

  getFrontiers(planId: string, levels?: number[]): Promise<FrontiersResponse> {
    const query = levels && levels.length ? `?levels=${levels.join(",")}` : "";
    return this.request<FrontiersResponse>(`/plans/${planId}/frontiers${query}`);
  }

  getProbability(planId: string, u0: number, xi: number): Promise<ProbabilityResponse> {
    return this.request<ProbabilityResponse>(
      `/plans/${planId}/probability?u0=${u0}&xi=${xi}`,
    );
  }
}
