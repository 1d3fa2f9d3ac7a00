/** SVG and HTML builders.  Every renderer is a pure function from data to
 * markup; the app shell owns the DOM and event wiring. */

import type { AxisModel, Interval, MergedRow } from "./model.js";
import { axisFraction, axisTicks, axisValue, histogram } from "./model.js";
import type { SelectionState } from "./selection.js";
import type { ClusterJson, ParamValue, SessionListItem } from "./types.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmt(value: ParamValue | null): string {
  if (value === null) return "";
  if (typeof value === "string") return value;
  if (Number.isInteger(value)) return String(value);
  const abs = Math.abs(value);
  if (abs !== 0 && (abs < 1e-3 || abs >= 1e5)) return value.toExponential(3);
  return String(Number(value.toPrecision(4)));
}

export interface PcpOptions {
  width: number;
  height: number;
}

export interface PcpGeometry {
  axisX: Map<string, number>;
  yTop: number;
  yBottom: number;
  width: number;
  height: number;
}

const PCP_MARGIN = { top: 34, bottom: 14, left: 60, right: 70 };

/** Pixel layout shared by the renderer and the brush pointer math. */
export function pcpGeometry(axes: AxisModel[], opts: PcpOptions): PcpGeometry {
  const visible = axes.filter((a) => a.visible);
  const innerWidth = opts.width - PCP_MARGIN.left - PCP_MARGIN.right;
  const gap = visible.length > 1 ? innerWidth / (visible.length - 1) : 0;
  const axisX = new Map<string, number>();
  visible.forEach((axis, i) => {
    axisX.set(axis.name, PCP_MARGIN.left + (visible.length > 1 ? i * gap : innerWidth / 2));
  });
  return {
    axisX,
    yTop: PCP_MARGIN.top,
    yBottom: opts.height - PCP_MARGIN.bottom,
    width: opts.width,
    height: opts.height,
  };
}

export function fractionToY(geometry: PcpGeometry, fraction: number): number {
  return geometry.yBottom - fraction * (geometry.yBottom - geometry.yTop);
}

export function yToFraction(geometry: PcpGeometry, y: number): number {
  const f = (geometry.yBottom - y) / (geometry.yBottom - geometry.yTop);
  return Math.min(1, Math.max(0, f));
}

function trialPath(row: MergedRow, axes: AxisModel[], geometry: PcpGeometry): string | null {
  const points: string[] = [];
  for (const axis of axes) {
    if (!axis.visible) continue;
    const f = axisFraction(axis, axisValue(axis, row));
    if (f === null) continue;
    const x = geometry.axisX.get(axis.name) as number;
    points.push(`${x.toFixed(1)},${fractionToY(geometry, f).toFixed(1)}`);
  }
  if (points.length < 2) return null;
  return `M${points.join(" L")}`;
}

function axisGroup(axis: AxisModel, rows: MergedRow[], geometry: PcpGeometry): string {
  const x = geometry.axisX.get(axis.name) as number;
  const parts: string[] = [];
  const cls = axis.kind === "measure" ? "axis measure" : "axis";
  parts.push(`<g class="${cls}" data-axis="${esc(axis.name)}">`);
  parts.push(
    `<line class="spine" x1="${x}" y1="${geometry.yTop}" x2="${x}" y2="${geometry.yBottom}"/>`,
  );
  parts.push(
    `<text class="axis-name" x="${x}" y="${geometry.yTop - 18}" text-anchor="middle">` +
      `${esc(axis.name)}</text>`,
  );

  for (const tick of axisTicks(axis)) {
    const f = axisFraction(axis, tick);
    if (f === null) continue;
    const y = fractionToY(geometry, f);
    parts.push(`<line class="tick" x1="${x - 3}" y1="${y.toFixed(1)}" x2="${x + 3}" y2="${y.toFixed(1)}"/>`);
    parts.push(
      `<text class="tick-label" x="${x + 6}" y="${(y + 3).toFixed(1)}">${esc(fmt(tick))}</text>`,
    );
  }

  const counts = histogram(axis, rows, 12);
  const peak = Math.max(1, ...counts);
  counts.forEach((count, i) => {
    if (count === 0) return;
    const f0 = i / counts.length;
    const f1 = (i + 1) / counts.length;
    const y1 = fractionToY(geometry, f1);
    const h = fractionToY(geometry, f0) - y1;
    const w = (10 * count) / peak;
    parts.push(
      `<rect class="density" x="${(x - 4 - w).toFixed(1)}" y="${y1.toFixed(1)}"` +
        ` width="${w.toFixed(1)}" height="${h.toFixed(1)}"/>`,
    );
  });

  for (const brush of axis.brushes) {
    if (Array.isArray(brush)) {
      for (const category of brush) {
        const f = axisFraction(axis, category);
        if (f === null) continue;
        const y = fractionToY(geometry, f);
        parts.push(
          `<rect class="brush-range" x="${x - 7}" y="${(y - 6).toFixed(1)}" width="14" height="12"/>`,
        );
      }
    } else {
      const span = brush as Interval;
      const yHi = fractionToY(geometry, axisFraction(axis, span.hi) ?? 1);
      const yLo = fractionToY(geometry, axisFraction(axis, span.lo) ?? 0);
      parts.push(
        `<rect class="brush-range" x="${x - 7}" y="${yHi.toFixed(1)}" width="14"` +
          ` height="${Math.max(1, yLo - yHi).toFixed(1)}"/>`,
      );
    }
  }

  // transparent strip capturing brush drags for this axis
  parts.push(
    `<rect class="brush-zone" data-axis="${esc(axis.name)}" x="${x - 9}"` +
      ` y="${geometry.yTop}" width="18" height="${geometry.yBottom - geometry.yTop}"/>`,
  );
  parts.push("</g>");
  return parts.join("");
}

/** The merged parallel coordinates plot.  One axis group per visible axis
 * (measure rightmost), one path per trial with enough values to draw. */
export function renderParallelCoords(
  rows: MergedRow[],
  axes: AxisModel[],
  selection: SelectionState,
  opts: PcpOptions = { width: 960, height: 420 },
): string {
  const geometry = pcpGeometry(axes, opts);
  const any = selection.ids.size > 0;
  const parts: string[] = [];
  parts.push(
    `<svg class="pcp" viewBox="0 0 ${opts.width} ${opts.height}"` +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );

  parts.push('<g class="trial-lines">');
  for (const row of rows) {
    const d = trialPath(row, axes, geometry);
    if (d === null) continue;
    const picked = selection.ids.has(row.key);
    const cls = "trial-line" + (picked ? " selected" : any ? " dimmed" : "");
    parts.push(
      `<path class="${cls}" data-key="${esc(row.key)}" d="${d}">` +
        `<title>${esc(row.key)} ${esc(fmt(row.metric))}</title></path>`,
    );
  }
  parts.push("</g>");

  for (const axis of axes) {
    if (axis.visible) parts.push(axisGroup(axis, rows, geometry));
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Learning duration: one horizontal bar per trial, length = epochs done. */
export function renderDurationBars(
  rows: MergedRow[],
  selection: SelectionState,
  opts: { width: number; rowHeight: number } = { width: 420, rowHeight: 14 },
): string {
  const maxEpochs = Math.max(1, ...rows.map((r) => r.epochs));
  const labelWidth = 90;
  const span = opts.width - labelWidth - 50;
  const height = rows.length * opts.rowHeight + 6;
  const parts: string[] = [];
  parts.push(
    `<svg class="durations" viewBox="0 0 ${opts.width} ${height}"` +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );
  rows.forEach((row, i) => {
    const y = 3 + i * opts.rowHeight;
    const w = (span * row.epochs) / maxEpochs;
    const picked = selection.ids.size === 0 || selection.ids.has(row.key);
    parts.push(
      `<text class="bar-label" x="${labelWidth - 4}" y="${y + 10}" text-anchor="end">` +
        `${esc(row.key)}</text>`,
    );
    parts.push(
      `<rect class="bar state-${esc(row.state)}${picked ? "" : " dimmed"}"` +
        ` data-key="${esc(row.key)}" x="${labelWidth}" y="${y + 2}"` +
        ` width="${Math.max(1, w).toFixed(1)}" height="${opts.rowHeight - 4}">` +
        `<title>${esc(row.key)}: ${row.epochs} epochs, ${esc(row.state)}</title></rect>`,
    );
    parts.push(
      `<text class="bar-value" x="${labelWidth + Math.max(1, w) + 4}" y="${y + 10}">` +
        `${row.epochs}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export interface MetricSeries {
  key: string;
  history: [number, number][];
}

/** Metric-vs-epoch lines for the selected trials, with hover titles. */
export function renderMetricLines(
  series: MetricSeries[],
  opts: { width: number; height: number } = { width: 420, height: 220 },
): string {
  const margin = { top: 10, right: 10, bottom: 22, left: 46 };
  const points = series.flatMap((s) => s.history);
  const maxEpoch = Math.max(1, ...points.map(([e]) => e));
  const metrics = points.map(([, m]) => m);
  const lo = Math.min(0, ...metrics);
  const hi = Math.max(1e-9, ...metrics);
  const sx = (e: number) =>
    margin.left + ((opts.width - margin.left - margin.right) * e) / maxEpoch;
  const sy = (m: number) =>
    opts.height - margin.bottom - ((opts.height - margin.top - margin.bottom) * (m - lo)) / (hi - lo);
  const parts: string[] = [];
  parts.push(
    `<svg class="metric-lines" viewBox="0 0 ${opts.width} ${opts.height}"` +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(
    `<line class="frame" x1="${margin.left}" y1="${sy(lo).toFixed(1)}"` +
      ` x2="${opts.width - margin.right}" y2="${sy(lo).toFixed(1)}"/>`,
  );
  for (const s of series) {
    if (s.history.length === 0) continue;
    const d = s.history
      .map(([e, m], i) => `${i === 0 ? "M" : "L"}${sx(e).toFixed(1)},${sy(m).toFixed(1)}`)
      .join("");
    const last = s.history[s.history.length - 1];
    parts.push(
      `<path class="metric-line" data-key="${esc(s.key)}" d="${d}">` +
        `<title>${esc(s.key)}: ${esc(fmt(last[1]))} at epoch ${last[0]}</title></path>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Scatter of one parameter against the measure. */
export function renderScatter(
  rows: MergedRow[],
  paramAxis: AxisModel,
  measureAxis: AxisModel,
  selection: SelectionState,
  opts: { width: number; height: number } = { width: 420, height: 220 },
): string {
  const margin = { top: 10, right: 14, bottom: 26, left: 46 };
  const parts: string[] = [];
  parts.push(
    `<svg class="scatter" viewBox="0 0 ${opts.width} ${opts.height}"` +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(
    `<text class="axis-name" x="${opts.width / 2}" y="${opts.height - 6}"` +
      ` text-anchor="middle">${esc(paramAxis.name)} vs ${esc(measureAxis.name)}</text>`,
  );
  const any = selection.ids.size > 0;
  for (const row of rows) {
    const fx = axisFraction(paramAxis, axisValue(paramAxis, row));
    const fy = axisFraction(measureAxis, row.metric);
    if (fx === null || fy === null) continue;
    const cx = margin.left + fx * (opts.width - margin.left - margin.right);
    const cy = opts.height - margin.bottom - fy * (opts.height - margin.top - margin.bottom);
    const picked = selection.ids.has(row.key);
    const cls = "dot" + (picked ? " selected" : any ? " dimmed" : "");
    parts.push(
      `<circle class="${cls}" data-key="${esc(row.key)}" cx="${cx.toFixed(1)}"` +
        ` cy="${cy.toFixed(1)}" r="3.5">` +
        `<title>${esc(row.key)}: ${esc(paramAxis.name)}=${esc(fmt(axisValue(paramAxis, row)))}` +
        ` ${esc(fmt(row.metric))}</title></circle>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export interface LineageEdge {
  child: number;
  parent: number;
}

/** Node-link view of exploit lineage inside one session. */
export function renderLineage(
  session: string,
  trialIds: number[],
  edges: LineageEdge[],
  selection: SelectionState,
  opts: { width: number; height: number } = { width: 420, height: 220 },
): string {
  const parentOf = new Map(edges.map((e) => [e.child, e.parent]));
  const depth = (id: number): number => {
    let d = 0;
    let cur = id;
    const seen = new Set<number>();
    while (parentOf.has(cur) && !seen.has(cur)) {
      seen.add(cur);
      cur = parentOf.get(cur) as number;
      d += 1;
    }
    return d;
  };
  const depths = new Map(trialIds.map((id) => [id, depth(id)]));
  const maxDepth = Math.max(0, ...depths.values());
  const x = (id: number) =>
    40 + ((opts.width - 80) * (depths.get(id) as number)) / Math.max(1, maxDepth);
  const y = (id: number) =>
    20 + ((opts.height - 40) * trialIds.indexOf(id)) / Math.max(1, trialIds.length - 1);
  const parts: string[] = [];
  parts.push(
    `<svg class="lineage" viewBox="0 0 ${opts.width} ${opts.height}"` +
      ` xmlns="http://www.w3.org/2000/svg">`,
  );
  for (const edge of edges) {
    parts.push(
      `<line class="edge" x1="${x(edge.parent).toFixed(1)}" y1="${y(edge.parent).toFixed(1)}"` +
        ` x2="${x(edge.child).toFixed(1)}" y2="${y(edge.child).toFixed(1)}"/>`,
    );
  }
  for (const id of trialIds) {
    const key = `${session}/${id}`;
    const picked = selection.ids.size === 0 || selection.ids.has(key);
    parts.push(
      `<circle class="node${picked ? "" : " dimmed"}" data-key="${esc(key)}"` +
        ` cx="${x(id).toFixed(1)}" cy="${y(id).toFixed(1)}" r="6"/>`,
    );
    parts.push(
      `<text class="node-label" x="${(x(id) + 9).toFixed(1)}" y="${(y(id) + 4).toFixed(1)}">` +
        `${id}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Model summary: precise values for the selected trials. */
export function renderSummaryTable(rows: MergedRow[], axes: AxisModel[]): string {
  const params = axes.filter((a) => a.kind === "param");
  const measure = axes.find((a) => a.kind === "measure");
  const head = ["session", "trial", ...params.map((a) => a.name), measure?.name ?? "metric", "epochs", "state"];
  const parts: string[] = ['<table class="summary"><thead><tr>'];
  for (const h of head) parts.push(`<th>${esc(h)}</th>`);
  parts.push("</tr></thead><tbody>");
  for (const row of rows) {
    parts.push(`<tr data-key="${esc(row.key)}">`);
    parts.push(`<td>${esc(row.session)}</td><td>${row.trial}</td>`);
    for (const axis of params) {
      const v = row.values[axis.name];
      parts.push(`<td>${v === null ? "" : esc(typeof v === "number" ? String(v) : v)}</td>`);
    }
    parts.push(`<td>${row.metric === null ? "" : String(row.metric)}</td>`);
    parts.push(`<td>${row.epochs}</td><td>${esc(row.state)}</td>`);
    parts.push("</tr>");
  }
  parts.push("</tbody></table>");
  return parts.join("");
}

/** Session picker rows with merge checkboxes. */
export function renderSessionList(sessions: SessionListItem[], checked: Set<string>): string {
  const parts: string[] = ['<table class="sessions"><thead><tr>'];
  for (const h of ["", "id", "status", "trials", "grant", "best"]) {
    parts.push(`<th>${esc(h)}</th>`);
  }
  parts.push("</tr></thead><tbody>");
  for (const s of sessions) {
    parts.push(`<tr data-session="${esc(s.id)}">`);
    parts.push(
      `<td><input type="checkbox" class="session-check" data-session="${esc(s.id)}"` +
        `${checked.has(s.id) ? " checked" : ""}/></td>`,
    );
    parts.push(`<td>${esc(s.id)}</td>`);
    parts.push(`<td><span class="status status-${esc(s.status)}">${esc(s.status)}</span></td>`);
    parts.push(`<td>${s.trials_created}</td><td>${s.grant}</td>`);
    parts.push(`<td>${s.best ? esc(fmt(s.best.metric)) : ""}</td>`);
    parts.push("</tr>");
  }
  parts.push("</tbody></table>");
  return parts.join("");
}

/** Cluster status strip. */
export function renderClusterBar(cluster: ClusterJson): string {
  const pct = (100 * cluster.utilization).toFixed(1);
  const grants = Object.entries(cluster.grants)
    .map(([sid, n]) => `${esc(sid)}:${n}`)
    .join(" ");
  return (
    `<span class="tick-count">tick ${cluster.tick}</span>` +
    `<span class="util">util ${pct}%</span>` +
    `<span class="meter"><span class="meter-fill" style="width:${pct}%"></span></span>` +
    `<span class="master">master ${esc(cluster.master ?? "none")}</span>` +
    `<span class="grants">${grants}</span>` +
    `<span class="queue">queue [${cluster.queue.map(esc).join(", ")}]</span>`
  );
}
