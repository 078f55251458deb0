/** Typed fetch client for the teaching service HTTP+JSON interface. */

import { DemoPayload } from "./stroke.js";

export interface SessionConfig {
  original: Record<string, unknown>;
  clock: { tf: number; alpha?: number };
  cbar: number;
  hyper?: { sk2: number; l: number; sn2: number };
}

export interface SessionState {
  id: string;
  revision: number;
  dimension: number;
  goal: number[];
  clock: { tf: number; alpha: number };
  cbar: number;
  hyper: { sk2: number; l: number; sn2: number };
  gas_guaranteed: boolean;
  controller_points: number;
  demos: DemoRecord[];
}

export interface DemoRecord {
  name: string;
  samples: number;
  accepted: number;
  rejected: number;
  revision: number;
}

export interface LearnResponse {
  accepted: number;
  rejected: number;
  revision: number;
}

export interface FieldGrid {
  bounds: number[][];
  resolution: number[];
  s: number;
  vectors: number[][];
  revision: number;
}

export interface TrajectoryResponse {
  t: number[];
  x: number[][];
  xdot: number[][];
  s: number[];
  terminated_by: string;
  revision: number;
}

export interface RolloutRequest {
  start: number[];
  config?: {
    dt?: number;
    max_time?: number;
    goal_tolerance?: number;
    integrator?: string;
    holds?: { t_start: number; duration: number }[];
  };
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson(resp: Response): Promise<any> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, body.error ?? `HTTP ${resp.status}`);
  }
  return body;
}

export class TeachingClient {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  private async post(path: string, body: unknown): Promise<any> {
    const resp = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson(resp);
  }

  async createSession(config: SessionConfig): Promise<{ id: string; revision: number }> {
    return this.post("/sessions", config);
  }

  async getSession(id: string): Promise<SessionState> {
    return asJson(await fetch(this.url(`/sessions/${id}`)));
  }

  async postDemonstration(id: string, demo: DemoPayload, expectRevision?: number): Promise<LearnResponse> {
    const body: Record<string, unknown> = { ...demo };
    if (expectRevision !== undefined) body.expect_revision = expectRevision;
    return this.post(`/sessions/${id}/demonstrations`, body);
  }

  async getField(id: string, s: number, bounds: number[][], res: number[]): Promise<FieldGrid> {
    const q = new URLSearchParams({
      s: String(s),
      bounds: bounds.map((b) => b.join(",")).join(","),
      res: res.join(","),
    });
    return asJson(await fetch(this.url(`/sessions/${id}/field?${q}`)));
  }

  async rollout(id: string, req: RolloutRequest): Promise<TrajectoryResponse> {
    return this.post(`/sessions/${id}/rollout`, req);
  }

  async resetController(id: string): Promise<{ revision: number }> {
    return asJson(await fetch(this.url(`/sessions/${id}/controller`), { method: "DELETE" }));
  }
}
