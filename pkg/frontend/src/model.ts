/** Merged trial table and axis models for the parallel coordinates view.
 *
 * Everything here is pure data shaping over API payloads.  The only numbers
 * computed client-side are axis min/max; every plotted value comes from the
 * server as-is.
 */

import type { ConfigJson, ParamValue, TrialJson } from "./types.js";

export interface SessionData {
  id: string;
  config: ConfigJson;
  trials: TrialJson[];
}

export interface MergedRow {
  /** "session/trial", unique across a merged view. */
  key: string;
  session: string;
  trial: number;
  state: string;
  epochs: number;
  metric: number | null;
  values: Record<string, ParamValue | null>;
}

export function rowKey(session: string, trial: number): string {
  return `${session}/${trial}`;
}

/** Distinct tuned hyperparameters across sessions, in first-seen order. */
export function paramUnion(sessions: SessionData[]): string[] {
  const names: string[] = [];
  for (const s of sessions) {
    for (const name of Object.keys(s.config.h_params)) {
      if (!names.includes(name)) names.push(name);
    }
  }
  return names;
}

/** One row per trial; params a session does not tune fall back to its
 * constants, and render as null when the session has no value at all. */
export function mergeTrials(sessions: SessionData[]): MergedRow[] {
  const params = paramUnion(sessions);
  const rows: MergedRow[] = [];
  for (const s of sessions) {
    const constants = s.config.constants ?? {};
    for (const t of s.trials) {
      const values: Record<string, ParamValue | null> = {};
      for (const name of params) {
        values[name] = t.assignment[name] ?? constants[name] ?? null;
      }
      rows.push({
        key: rowKey(s.id, t.id),
        session: s.id,
        trial: t.id,
        state: t.state,
        epochs: t.epochs,
        metric: t.metric,
        values,
      });
    }
  }
  return rows;
}

export type AxisScale = "linear" | "log" | "categorical";

export interface Interval {
  lo: number;
  hi: number;
}

/** A brushed range: numeric interval, or a subset of categories. */
export type BrushRange = Interval | ParamValue[];

export interface AxisModel {
  name: string;
  kind: "param" | "measure";
  scale: AxisScale;
  visible: boolean;
  brushes: BrushRange[];
  /** Numeric extent of rendered values; [0, 1] placeholder when empty. */
  domain: [number, number];
  /** Category order, categorical axes only. */
  categories: ParamValue[];
}

function numericExtent(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = values[0];
  let hi = values[0];
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

function scaleFor(name: string, sessions: SessionData[]): AxisScale {
  let sawLog = false;
  for (const s of sessions) {
    const spec = s.config.h_params[name];
    if (!spec) continue;
    if (spec.type === "str") return "categorical";
    if (spec.distribution === "log_uniform") sawLog = true;
  }
  return sawLog ? "log" : "linear";
}

function categoriesFor(name: string, sessions: SessionData[], rows: MergedRow[]): ParamValue[] {
  const seen: ParamValue[] = [];
  for (const s of sessions) {
    const spec = s.config.h_params[name];
    if (spec && spec.distribution === "categorical") {
      for (const v of spec.parameters) {
        if (!seen.includes(v)) seen.push(v);
      }
    }
  }
  for (const row of rows) {
    const v = row.values[name];
    if (v !== null && !seen.includes(v)) seen.push(v);
  }
  return seen;
}

/** One axis per distinct hyperparameter, plus the measure axis, rightmost. */
export function buildAxes(sessions: SessionData[], rows: MergedRow[]): AxisModel[] {
  const axes: AxisModel[] = [];
  for (const name of paramUnion(sessions)) {
    const scale = scaleFor(name, sessions);
    const numeric: number[] = [];
    for (const row of rows) {
      const v = row.values[name];
      if (typeof v === "number") numeric.push(v);
    }
    let domain = numericExtent(numeric);
    if (scale === "log" && domain[0] <= 0) domain = [Number.MIN_VALUE, Math.max(domain[1], 1)];
    axes.push({
      name,
      kind: "param",
      scale,
      visible: true,
      brushes: [],
      domain,
      categories: scale === "categorical" ? categoriesFor(name, sessions, rows) : [],
    });
  }
  const measure = sessions[0]?.config.measure ?? "metric";
  const metrics = rows.map((r) => r.metric).filter((m): m is number => m !== null);
  axes.push({
    name: measure,
    kind: "measure",
    scale: "linear",
    visible: true,
    brushes: [],
    domain: numericExtent(metrics),
    categories: [],
  });
  return axes;
}

/** Carry brushes and visibility over a rebuild (polling refresh). */
export function reconcileAxes(fresh: AxisModel[], previous: AxisModel[]): AxisModel[] {
  const byName = new Map(previous.map((a) => [a.name, a]));
  return fresh.map((axis) => {
    const old = byName.get(axis.name);
    if (!old || old.kind !== axis.kind) return axis;
    return { ...axis, visible: old.visible, brushes: old.brushes };
  });
}

/** Value a row shows on an axis; metric for the measure axis. */
export function axisValue(axis: AxisModel, row: MergedRow): ParamValue | null {
  return axis.kind === "measure" ? row.metric : row.values[axis.name];
}

/** Position of a value along the axis as a fraction in [0, 1] (0 = low end).
 * Returns null when the value is missing or off-scale. */
export function axisFraction(axis: AxisModel, value: ParamValue | null): number | null {
  if (value === null) return null;
  if (axis.scale === "categorical") {
    const idx = axis.categories.indexOf(value);
    if (idx < 0) return null;
    return axis.categories.length <= 1 ? 0.5 : idx / (axis.categories.length - 1);
  }
  if (typeof value !== "number") return null;
  const [lo, hi] = axis.domain;
  if (axis.scale === "log") {
    if (value <= 0 || lo <= 0) return null;
    if (hi === lo) return 0.5;
    return (Math.log(value) - Math.log(lo)) / (Math.log(hi) - Math.log(lo));
  }
  if (hi === lo) return 0.5;
  return (value - lo) / (hi - lo);
}

/** Inverse of axisFraction for numeric scales; categorical snaps to the
 * nearest category. */
export function fractionToValue(axis: AxisModel, fraction: number): ParamValue {
  const f = Math.min(1, Math.max(0, fraction));
  if (axis.scale === "categorical") {
    if (axis.categories.length <= 1) return axis.categories[0];
    const idx = Math.round(f * (axis.categories.length - 1));
    return axis.categories[idx];
  }
  const [lo, hi] = axis.domain;
  if (axis.scale === "log") {
    return Math.exp(Math.log(lo) + f * (Math.log(hi) - Math.log(lo)));
  }
  return lo + f * (hi - lo);
}

/** Whether a value passes an axis's brushes.  No brushes means pass; a
 * brushed axis rejects missing values; multiple ranges on one axis union. */
export function matchesBrush(axis: AxisModel, value: ParamValue | null): boolean {
  if (axis.brushes.length === 0) return true;
  if (value === null) return false;
  for (const brush of axis.brushes) {
    if (Array.isArray(brush)) {
      if (brush.includes(value)) return true;
    } else if (typeof value === "number" && brush.lo <= value && value <= brush.hi) {
      return true;
    }
  }
  return false;
}

/** Bin counts of rendered values along an axis, for density mini-plots. */
export function histogram(axis: AxisModel, rows: MergedRow[], bins: number): number[] {
  const counts = new Array<number>(bins).fill(0);
  for (const row of rows) {
    const f = axisFraction(axis, axisValue(axis, row));
    if (f === null || f < 0 || f > 1) continue;
    counts[Math.min(bins - 1, Math.floor(f * bins))] += 1;
  }
  return counts;
}

/** Tick values for an axis label column. */
export function axisTicks(axis: AxisModel, count = 5): ParamValue[] {
  if (axis.scale === "categorical") return [...axis.categories];
  const [lo, hi] = axis.domain;
  if (hi === lo) return [lo];
  const out: number[] = [];
  for (let i = 0; i < count; i++) {
    out.push(fractionToValue(axis, i / (count - 1)) as number);
  }
  return out;
}
