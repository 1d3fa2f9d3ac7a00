/** Browser shell: state, polling, and event wiring around the pure
 * model/render layers.  This is the only file that touches the DOM. */

import { ApiClient, ApiError } from "./api.js";
import type { AxisModel, MergedRow, SessionData } from "./model.js";
import {
  buildAxes,
  fractionToValue,
  mergeTrials,
  reconcileAxes,
  rowKey,
} from "./model.js";
import type { SelectionState } from "./selection.js";
import {
  brushSelection,
  emptySelection,
  maskTopK,
  selectedRows,
  toggleManual,
} from "./selection.js";
import {
  fmt,
  pcpGeometry,
  renderClusterBar,
  renderDurationBars,
  renderLineage,
  renderMetricLines,
  renderParallelCoords,
  renderScatter,
  renderSessionList,
  renderSummaryTable,
  yToFraction,
} from "./render.js";
import { buildRerun, rerunFromBrushes } from "./rerun.js";
import type { SessionListItem, TrialsResponse } from "./types.js";

const POLL_MS = 2000;
const PCP_SIZE = { width: 960, height: 420 };

interface AppState {
  sessions: SessionListItem[];
  checked: Set<string>;
  data: SessionData[];
  trialsBySession: Map<string, TrialsResponse>;
  rows: MergedRow[];
  axes: AxisModel[];
  selection: SelectionState;
  scatterParam: string | null;
  error: string | null;
}

const api = new ApiClient("");
const state: AppState = {
  sessions: [],
  checked: new Set(),
  data: [],
  trialsBySession: new Map(),
  rows: [],
  axes: [],
  selection: emptySelection(),
  scatterParam: null,
  error: null,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function mergedOrder(): "ascending" | "descending" {
  return state.data[0]?.config.order ?? "descending";
}

// ---------------------------------------------------------------------------
// data refresh

async function refresh(): Promise<void> {
  try {
    const [sessions, cluster] = await Promise.all([api.listSessions(), api.cluster()]);
    state.sessions = sessions;
    el("cluster-bar").innerHTML = renderClusterBar(cluster);
    state.error = null;

    const ids = sessions.map((s) => s.id).filter((id) => state.checked.has(id));
    const fetched = await Promise.all(
      ids.map(async (id) => {
        const [detail, trials] = await Promise.all([api.session(id), api.trials(id)]);
        return { detail, trials };
      }),
    );
    state.data = fetched.map(({ detail, trials }) => ({
      id: detail.id,
      config: detail.config,
      trials: trials.trials,
    }));
    state.trialsBySession = new Map(fetched.map(({ trials }) => [trials.session, trials]));
    state.rows = mergeTrials(state.data);
    state.axes = reconcileAxes(buildAxes(state.data, state.rows), state.axes);

    const loaded = new Set(state.rows.map((r) => r.key));
    if (state.selection.source.kind === "brush") {
      state.selection = brushSelection(state.rows, state.axes);
    } else if (state.selection.source.kind === "topK") {
      state.selection = maskTopK(state.rows, mergedOrder(), state.selection.source.k);
    } else {
      const kept = [...state.selection.ids].filter((k) => loaded.has(k));
      state.selection = { ...state.selection, ids: new Set(kept) };
    }
  } catch (err) {
    state.error = err instanceof Error ? err.message : String(err);
  }
  render();
}

// ---------------------------------------------------------------------------
// rendering

function render(): void {
  el("session-list").innerHTML = renderSessionList(state.sessions, state.checked);
  el("pcp-host").innerHTML = renderParallelCoords(
    state.rows,
    state.axes,
    state.selection,
    PCP_SIZE,
  );
  renderAxisToggles();
  renderAnalysis();
  renderRerunTargets();
  el("status-line").textContent = state.error
    ? `error: ${state.error}`
    : `${state.rows.length} trials, ${state.selection.ids.size} selected`;
}

function renderAxisToggles(): void {
  const host = el("axis-toggles");
  host.innerHTML = state.axes
    .map(
      (a) =>
        `<label><input type="checkbox" class="axis-toggle" data-axis="${a.name}"` +
        `${a.visible ? " checked" : ""}${a.kind === "measure" ? " disabled" : ""}/>` +
        ` ${a.name}</label>`,
    )
    .join("");
}

function renderAnalysis(): void {
  const picked = selectedRows(state.rows, state.selection);
  const shown = picked.length > 0 ? picked : state.rows;

  el("duration-host").innerHTML = renderDurationBars(state.rows, state.selection);

  const series = shown.slice(0, 40).map((row) => {
    const trials = state.trialsBySession.get(row.session);
    const trial = trials?.trials.find((t) => t.id === row.trial);
    return { key: row.key, history: trial?.history ?? [] };
  });
  el("history-host").innerHTML = renderMetricLines(series);

  const paramAxes = state.axes.filter((a) => a.kind === "param");
  const measureAxis = state.axes.find((a) => a.kind === "measure");
  const chosen =
    paramAxes.find((a) => a.name === state.scatterParam) ?? paramAxes[0] ?? null;
  const select = el("scatter-param") as HTMLSelectElement;
  select.innerHTML = paramAxes
    .map(
      (a) =>
        `<option value="${a.name}"${a === chosen ? " selected" : ""}>${a.name}</option>`,
    )
    .join("");
  el("scatter-host").innerHTML =
    chosen && measureAxis
      ? renderScatter(state.rows, chosen, measureAxis, state.selection)
      : "";

  const lineageHost = el("lineage-host");
  const withLineage = [...state.trialsBySession.values()].filter((t) => t.lineage.length > 0);
  lineageHost.innerHTML = withLineage
    .map((t) =>
      renderLineage(
        t.session,
        t.trials.map((x) => x.id),
        t.lineage,
        state.selection,
      ),
    )
    .join("");

  el("summary-host").innerHTML = renderSummaryTable(picked, state.axes);
}

function renderRerunTargets(): void {
  const select = el("rerun-base") as HTMLSelectElement;
  const current = select.value;
  select.innerHTML = state.data
    .map((s) => `<option value="${s.id}"${s.id === current ? " selected" : ""}>${s.id}</option>`)
    .join("");
}

// ---------------------------------------------------------------------------
// brushing

interface DragState {
  axis: string;
  y0: number;
}

let drag: DragState | null = null;

function svgY(event: PointerEvent): number {
  const svg = (event.target as Element).closest("svg.pcp") as SVGSVGElement | null;
  if (!svg) return 0;
  const rect = svg.getBoundingClientRect();
  return ((event.clientY - rect.top) / rect.height) * PCP_SIZE.height;
}

function commitBrush(axisName: string, y0: number, y1: number, additive: boolean): void {
  const axis = state.axes.find((a) => a.name === axisName);
  if (!axis) return;
  const geometry = pcpGeometry(state.axes, PCP_SIZE);
  if (Math.abs(y1 - y0) < 3) {
    axis.brushes = [];
  } else {
    const fLo = yToFraction(geometry, Math.max(y0, y1));
    const fHi = yToFraction(geometry, Math.min(y0, y1));
    let range;
    if (axis.scale === "categorical") {
      const n = axis.categories.length;
      const iLo = Math.ceil(fLo * Math.max(1, n - 1) - 0.25);
      const iHi = Math.floor(fHi * Math.max(1, n - 1) + 0.25);
      range = axis.categories.slice(Math.max(0, iLo), Math.min(n, iHi + 1));
    } else {
      range = {
        lo: fractionToValue(axis, fLo) as number,
        hi: fractionToValue(axis, fHi) as number,
      };
    }
    axis.brushes = additive ? [...axis.brushes, range] : [range];
  }
  state.selection = brushSelection(state.rows, state.axes);
  render();
}

// ---------------------------------------------------------------------------
// event wiring

function wire(): void {
  document.addEventListener("change", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("session-check")) {
      const id = target.dataset.session as string;
      if ((target as HTMLInputElement).checked) state.checked.add(id);
      else state.checked.delete(id);
      void refresh();
    } else if (target.classList.contains("axis-toggle")) {
      const axis = state.axes.find((a) => a.name === target.dataset.axis);
      if (axis) axis.visible = (target as HTMLInputElement).checked;
      render(); // visibility never mutates the selection
    } else if (target.id === "scatter-param") {
      state.scatterParam = (target as HTMLSelectElement).value;
      render();
    }
  });

  document.addEventListener("pointerdown", (event) => {
    const zone = (event.target as Element).closest?.(".brush-zone") as SVGElement | null;
    if (zone) {
      drag = { axis: zone.dataset.axis as string, y0: svgY(event) };
      event.preventDefault();
    }
  });
  document.addEventListener("pointerup", (event) => {
    if (!drag) return;
    commitBrush(drag.axis, drag.y0, svgY(event), event.shiftKey);
    drag = null;
  });

  document.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const keyed = target.closest?.("[data-key]") as HTMLElement | null;
    if (keyed && !target.classList.contains("brush-zone")) {
      state.selection = toggleManual(state.selection, keyed.dataset.key as string);
      render();
      return;
    }
    if (target.id === "apply-topk") {
      const k = Number((el("topk-input") as HTMLInputElement).value) || 10;
      state.selection = maskTopK(state.rows, mergedOrder(), k);
      render();
    } else if (target.id === "clear-selection") {
      for (const axis of state.axes) axis.brushes = [];
      state.selection = emptySelection();
      render();
    } else if (target.id === "prefill-rerun") {
      const base = (el("rerun-base") as HTMLSelectElement).value;
      const session = state.data.find((s) => s.id === base);
      if (!session) return;
      const picked = selectedRows(state.rows, state.selection).filter(
        (r) => r.session === base,
      );
      const request =
        state.selection.source.kind === "brush"
          ? rerunFromBrushes(state.axes, session.config)
          : buildRerun(picked, session.config);
      (el("rerun-body") as HTMLTextAreaElement).value = request
        ? JSON.stringify(request, null, 2)
        : "";
      el("rerun-status").textContent = request ? "" : "nothing selected to narrow";
    } else if (target.id === "submit-rerun") {
      void submitRerun();
    } else if (target.id === "submit-config") {
      void submitConfig();
    } else if (target.id === "advance-ticks") {
      const n = Number((el("ticks-input") as HTMLInputElement).value) || 1;
      void api.ticks(n).then(refresh, showError);
    }
  });
}

function showError(err: unknown): void {
  state.error =
    err instanceof ApiError ? `${err.code}${err.field ? ` (${err.field})` : ""}: ${err.message}`
    : err instanceof Error ? err.message
    : String(err);
  render();
}

async function submitRerun(): Promise<void> {
  const base = (el("rerun-base") as HTMLSelectElement).value;
  const text = (el("rerun-body") as HTMLTextAreaElement).value.trim();
  if (!base || !text) return;
  try {
    const result = await api.rerun(base, JSON.parse(text));
    el("rerun-status").textContent = `created ${result.id} from ${result.base}`;
    state.checked.add(result.id);
    await refresh();
  } catch (err) {
    showError(err);
  }
}

async function submitConfig(): Promise<void> {
  const text = (el("config-body") as HTMLTextAreaElement).value.trim();
  if (!text) return;
  try {
    const id = await api.submit(text);
    el("submit-status").textContent = `submitted ${id}`;
    state.checked.add(id);
    await refresh();
  } catch (err) {
    showError(err);
  }
}

export function main(): void {
  wire();
  void refresh();
  window.setInterval(() => void refresh(), POLL_MS);
}

main();

// referenced by tests and console debugging
export { api, state, fmt, rowKey };
