/** Teaching console: draw demonstrations, watch the reshaped field and
 * rollouts update, tune parameters, iterate until the skill looks right.
 */

import { TeachingClient, FieldGrid } from "./api.js";
import { makeMapping, pxToTask, CanvasMapping } from "./coords.js";
import { drawField, drawMarker, drawPath, fieldArrows, pathToPx, stallSpans } from "./render.js";
import { strokeToDemo, StrokeSample } from "./stroke.js";
import { applyParameters, PanelValues, sessionConfig, validatePanel, ViewState } from "./state.js";

const SERVICE = (window as any).TEACH_SERVICE_URL ?? "http://127.0.0.1:8787";
const BOUNDS = { xMin: -2.2, xMax: 2.2, yMin: -2.2, yMax: 2.2 };
const FIELD_RES = [24, 24];
const GOAL = [0.0, 0.0];

const client = new TeachingClient(SERVICE);
const state = new ViewState();

const canvas = document.getElementById("board") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const mapping: CanvasMapping = makeMapping(canvas.width, canvas.height, BOUNDS);

const banner = document.getElementById("banner") as HTMLDivElement;
const demoList = document.getElementById("demo-list") as HTMLUListElement;
const sSlider = document.getElementById("s-slider") as HTMLInputElement;
const sValue = document.getElementById("s-value") as HTMLSpanElement;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const applyButton = document.getElementById("apply") as HTMLButtonElement;
const resetButton = document.getElementById("reset") as HTMLButtonElement;
const statusLine = document.getElementById("status") as HTMLSpanElement;

function panelValues(): PanelValues {
  const read = (id: string) => Number((document.getElementById(id) as HTMLInputElement).value);
  return { tf: read("tf"), alpha: read("alpha"), cbar: read("cbar"),
           sk2: read("sk2"), l: read("l"), sn2: read("sn2") };
}

function originalSystem(): Record<string, unknown> {
  const gain = Number((document.getElementById("gain") as HTMLInputElement).value);
  return { kind: "linear-gain", dimension: 2, goal: GOAL, parameters: { gain } };
}

function showBanner(text: string): void {
  banner.textContent = text;
  banner.style.display = text ? "block" : "none";
}

function warnPanel(errors: Record<string, string>): void {
  for (const id of ["tf", "alpha", "cbar", "sk2", "l", "sn2"]) {
    const el = document.getElementById(id) as HTMLInputElement;
    el.style.borderColor = errors[id] ? "#c0392b" : "";
    el.title = errors[id] ?? "";
  }
}

let appliedValues = "";
let strokeSamples: StrokeSample[] | null = null;
let drawnPreview: [number, number][] = [];

async function redraw(): Promise<void> {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (state.fieldCache) {
    const cell = (mapping.scale * (BOUNDS.xMax - BOUNDS.xMin)) / FIELD_RES[0];
    drawField(ctx, fieldArrows(state.fieldCache, mapping, cell), state.fieldIsStale);
  }
  for (const demo of state.demoLog) {
    drawPath(ctx, pathToPx(demo.payload.samples.positions, mapping), "#c0392b", 2);
    for (const p of demo.payload.samples.positions) drawMarker(ctx, mapping, p, "#c0392b", 1.5);
  }
  for (const traj of state.rollouts) {
    drawPath(ctx, pathToPx(traj.x, mapping), "#1f7a33", 2);
    for (const span of stallSpans(traj, GOAL, 0.03, 0.02)) {
      drawMarker(ctx, mapping, span.center, "#e67e22", 8);
    }
  }
  if (drawnPreview.length > 1) drawPath(ctx, drawnPreview, "#999999", 1);
  drawMarker(ctx, mapping, GOAL, "#1f7a33", 7);
  statusLine.textContent = state.sessionId
    ? `session ${state.sessionId} rev ${state.revision}` +
      (state.fieldIsStale ? " (field stale...)" : "")
    : "no session";
}

async function refreshField(): Promise<void> {
  if (!state.sessionId) return;
  try {
    const s = Number(sSlider.value);
    const grid: FieldGrid = await client.getField(
      state.sessionId, s,
      [[BOUNDS.xMin, BOUNDS.xMax], [BOUNDS.yMin, BOUNDS.yMax]], FIELD_RES);
    state.acceptField(grid);
    showBanner("");
  } catch (err) {
    showBanner(`service unreachable: ${err}`);
  }
  await redraw();
}

function renderDemoList(): void {
  demoList.innerHTML = "";
  state.demoLog.forEach((demo, i) => {
    const li = document.createElement("li");
    li.textContent = `${demo.payload.name || `demo ${i + 1}`}: ` +
      `${demo.accepted} accepted / ${demo.rejected} rejected`;
    demoList.appendChild(li);
  });
}

async function ensureSession(): Promise<void> {
  const values = panelValues();
  const errors = validatePanel(values);
  warnPanel(errors as Record<string, string>);
  if (Object.keys(errors).length > 0) throw new Error("invalid parameters");
  if (!state.sessionId) {
    const created = await client.createSession(sessionConfig(originalSystem(), values));
    state.sessionId = created.id;
    state.revision = created.revision;
    appliedValues = JSON.stringify(values);
  }
}

async function submitStroke(samples: StrokeSample[]): Promise<void> {
  const count = Number((document.getElementById("samples") as HTMLInputElement).value) || 100;
  const demo = strokeToDemo(samples, mapping, count, `stroke ${state.demoLog.length + 1}`);
  if (demo === null) {
    showBanner("stroke too short: draw at least two distinct points");
    return;
  }
  await ensureSession();
  const res = await client.postDemonstration(state.sessionId, demo);
  state.noteMutation(res.revision);
  state.demoLog.push({ payload: demo, accepted: res.accepted, rejected: res.rejected });
  const tfEl = document.getElementById("tf") as HTMLInputElement;
  const demoDuration = demo.samples.t[demo.samples.t.length - 1] - demo.samples.t[0];
  if (Number(tfEl.value) < demoDuration) {
    showBanner("warning: t_f is below the demonstration duration; " +
      "the control may be cut before the motion finishes");
  }
  renderDemoList();
  await refreshField();
}

async function seedRollout(x: number, y: number): Promise<void> {
  await ensureSession();
  const traj = await client.rollout(state.sessionId, {
    start: [x, y],
    config: { max_time: Number((document.getElementById("tf") as HTMLInputElement).value) + 10 },
  });
  state.rollouts.push(traj);
  await redraw();
}

canvas.addEventListener("pointerdown", (ev) => {
  if (modeSelect.value === "draw") {
    strokeSamples = [{ tMs: ev.timeStamp, px: ev.offsetX, py: ev.offsetY }];
    drawnPreview = [[ev.offsetX, ev.offsetY]];
  } else {
    const [x, y] = pxToTask(mapping, ev.offsetX, ev.offsetY);
    seedRollout(x, y).catch((err) => showBanner(String(err)));
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (strokeSamples) {
    strokeSamples.push({ tMs: ev.timeStamp, px: ev.offsetX, py: ev.offsetY });
    drawnPreview.push([ev.offsetX, ev.offsetY]);
    redraw();
  }
});

canvas.addEventListener("pointerup", () => {
  const samples = strokeSamples;
  strokeSamples = null;
  drawnPreview = [];
  if (samples) submitStroke(samples).catch((err) => showBanner(String(err)));
});

sSlider.addEventListener("input", () => {
  sValue.textContent = Number(sSlider.value).toFixed(2);
  refreshField().catch(() => undefined);
});

applyButton.addEventListener("click", async () => {
  const values = panelValues();
  const errors = validatePanel(values);
  warnPanel(errors as Record<string, string>);
  if (Object.keys(errors).length > 0) return;
  if (JSON.stringify(values) === appliedValues) return; // no-op: revision untouched
  try {
    state.rollouts = [];
    await applyParameters(client, state, originalSystem(), values);
    appliedValues = JSON.stringify(values);
    renderDemoList();
    await refreshField();
  } catch (err) {
    showBanner(String(err));
  }
});

resetButton.addEventListener("click", async () => {
  if (!state.sessionId) return;
  const res = await client.resetController(state.sessionId);
  state.noteMutation(res.revision);
  state.demoLog = [];
  state.rollouts = [];
  renderDemoList();
  await refreshField();
});

// polling: on-mutation refreshes happen inline above; 1 Hz keeps the view
// converged if another client mutates the session
setInterval(() => {
  if (!state.sessionId) return;
  client.getSession(state.sessionId).then((session) => {
    if (session.revision > state.revision) {
      state.noteMutation(session.revision);
      refreshField().catch(() => undefined);
    }
  }).catch((err) => showBanner(`service unreachable: ${err}`));
}, 1000);

ensureSession().then(refreshField).catch((err) => showBanner(String(err)));
