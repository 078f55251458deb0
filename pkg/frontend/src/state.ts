/** View state: the single source of truth is the service; the UI caches
 * responses tagged with the revision they reflect and discards stale ones.
 */

import { DemoRecord, FieldGrid, SessionConfig, TeachingClient, TrajectoryResponse } from "./api.js";
import { DemoPayload } from "./stroke.js";

export interface PanelValues {
  tf: number;
  alpha: number;
  cbar: number;
  sk2: number;
  l: number;
  sn2: number;
}

export interface TaughtDemo {
  payload: DemoPayload;
  accepted: number;
  rejected: number;
}

export class ViewState {
  sessionId = "";
  revision = 0;
  fieldCache: FieldGrid | null = null;
  rollouts: TrajectoryResponse[] = [];
  demoLog: TaughtDemo[] = [];
  serviceDemos: DemoRecord[] = [];

  /** Displayed grid may only lag the session, never lead it. */
  acceptField(grid: FieldGrid): boolean {
    if (this.fieldCache && grid.revision < this.fieldCache.revision) return false;
    if (grid.revision > this.revision) this.revision = grid.revision;
    this.fieldCache = grid;
    return true;
  }

  get fieldIsStale(): boolean {
    return this.fieldCache === null || this.fieldCache.revision < this.revision;
  }

  noteMutation(revision: number): void {
    if (revision > this.revision) this.revision = revision;
  }
}

export function validatePanel(v: PanelValues): Partial<Record<keyof PanelValues, string>> {
  const errors: Partial<Record<keyof PanelValues, string>> = {};
  if (!(v.tf > 0)) errors.tf = "t_f must be positive";
  if (!(v.alpha > 0)) errors.alpha = "alpha must be positive";
  if (!(v.cbar >= 0)) errors.cbar = "threshold must be non-negative";
  if (!(v.sk2 > 0)) errors.sk2 = "signal variance must be positive";
  if (!(v.l > 0)) errors.l = "length scale must be positive";
  if (!(v.sn2 >= 0)) errors.sn2 = "noise variance must be non-negative";
  return errors;
}

export function sessionConfig(original: Record<string, unknown>, v: PanelValues): SessionConfig {
  return {
    original,
    clock: { tf: v.tf, alpha: v.alpha },
    cbar: v.cbar,
    hyper: { sk2: v.sk2, l: v.l, sn2: v.sn2 },
  };
}

/**
 * Apply changed parameters: recreate the session with the new values and
 * replay every taught demonstration in order, so the accepted counts show
 * the new sparsity trade-off. Returns the new session id and per-demo
 * counts. A no-op change (validated equal values) must be skipped by the
 * caller so the revision stays untouched.
 */
export async function applyParameters(
  client: TeachingClient,
  state: ViewState,
  original: Record<string, unknown>,
  values: PanelValues,
): Promise<{ sessionId: string; counts: { accepted: number; rejected: number }[] }> {
  const errors = validatePanel(values);
  if (Object.keys(errors).length > 0) {
    throw new Error(`invalid parameters: ${JSON.stringify(errors)}`);
  }
  const created = await client.createSession(sessionConfig(original, values));
  const counts: { accepted: number; rejected: number }[] = [];
  const replayed: TaughtDemo[] = [];
  for (const demo of state.demoLog) {
    const res = await client.postDemonstration(created.id, demo.payload);
    counts.push({ accepted: res.accepted, rejected: res.rejected });
    replayed.push({ payload: demo.payload, accepted: res.accepted, rejected: res.rejected });
  }
  state.sessionId = created.id;
  state.demoLog = replayed;
  state.fieldCache = null;
  const session = await client.getSession(created.id);
  state.revision = session.revision;
  state.serviceDemos = session.demos;
  return { sessionId: created.id, counts };
}
