/** Selection over the merged trial table: top-k masking, brushing, manual
 * picks.  The same ordering as the server's /top endpoint, so a top-k mask
 * and the API agree trial for trial. */

import type { AxisModel, MergedRow } from "./model.js";
import { axisValue, matchesBrush } from "./model.js";

export type SelectionSource =
  | { kind: "none" }
  | { kind: "topK"; k: number }
  | { kind: "brush" }
  | { kind: "manual" };

export interface SelectionState {
  ids: Set<string>;
  source: SelectionSource;
}

export function emptySelection(): SelectionState {
  return { ids: new Set(), source: { kind: "none" } };
}

/** Rows with a metric, best first; ties break by (session, trial) exactly
 * like the server's (metric, id) sort within one session. */
export function rankRows(rows: MergedRow[], order: "ascending" | "descending"): MergedRow[] {
  const scored = rows.filter((r) => r.metric !== null);
  const sign = order === "descending" ? -1 : 1;
  return scored.sort((a, b) => {
    const d = sign * ((a.metric as number) - (b.metric as number));
    if (d !== 0) return d;
    if (a.session !== b.session) return a.session < b.session ? -1 : 1;
    return a.trial - b.trial;
  });
}

/** Select the min(k, scored) best rows. */
export function maskTopK(
  rows: MergedRow[],
  order: "ascending" | "descending",
  k: number,
): SelectionState {
  const picked = rankRows(rows, order).slice(0, Math.max(0, k));
  return { ids: new Set(picked.map((r) => r.key)), source: { kind: "topK", k } };
}

/** Rows passing every brushed axis (ranges on one axis union, axes AND). */
export function brushSelection(rows: MergedRow[], axes: AxisModel[]): SelectionState {
  const brushed = axes.filter((a) => a.brushes.length > 0);
  if (brushed.length === 0) {
    return { ids: new Set(rows.map((r) => r.key)), source: { kind: "brush" } };
  }
  const ids = new Set<string>();
  for (const row of rows) {
    if (brushed.every((axis) => matchesBrush(axis, axisValue(axis, row)))) {
      ids.add(row.key);
    }
  }
  return { ids, source: { kind: "brush" } };
}

export function toggleManual(selection: SelectionState, key: string): SelectionState {
  const ids = new Set(selection.ids);
  if (ids.has(key)) ids.delete(key);
  else ids.add(key);
  return { ids, source: { kind: "manual" } };
}

export function selectedRows(rows: MergedRow[], selection: SelectionState): MergedRow[] {
  return rows.filter((r) => selection.ids.has(r.key));
}
