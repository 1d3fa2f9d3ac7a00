/** Turn a selection into a rerun request: per tuned parameter, the numeric
 * [min, max] (or category subset) spanned by the selected trials.  The user
 * can edit the request before it is posted. */

import type { AxisModel, Interval, MergedRow } from "./model.js";
import type { ConfigJson, ParamValue, RerunRequest } from "./types.js";

/** null disables the action (nothing selected, or nothing to narrow). */
export function buildRerun(selected: MergedRow[], base: ConfigJson): RerunRequest | null {
  if (selected.length === 0) return null;
  const ranges: Record<string, ParamValue[]> = {};
  for (const [name, spec] of Object.entries(base.h_params)) {
    const values = selected
      .map((r) => r.values[name])
      .filter((v): v is ParamValue => v !== null);
    if (values.length === 0) continue;
    if (spec.distribution === "categorical") {
      const subset = spec.parameters.filter((c) => values.includes(c));
      if (subset.length > 0) ranges[name] = subset;
    } else {
      const numbers = values.filter((v): v is number => typeof v === "number");
      if (numbers.length === 0) continue;
      ranges[name] = [Math.min(...numbers), Math.max(...numbers)];
    }
  }
  if (Object.keys(ranges).length === 0) return null;
  return { ranges };
}

/** Rerun request straight from the active brushes: each brushed parameter
 * axis contributes its brushed range as the new tuning range.  Disjoint
 * intervals on one axis collapse to their span, since a narrowed range is a
 * single [low, high].  Numeric ranges clip to the parameter's outer bounds
 * so the server accepts them. */
export function rerunFromBrushes(axes: AxisModel[], base: ConfigJson): RerunRequest | null {
  const ranges: Record<string, ParamValue[]> = {};
  for (const axis of axes) {
    if (axis.kind !== "param" || axis.brushes.length === 0) continue;
    const spec = base.h_params[axis.name];
    if (!spec) continue;
    if (spec.distribution === "categorical") {
      const chosen = spec.parameters.filter((c) =>
        axis.brushes.some((b) => Array.isArray(b) && b.includes(c)),
      );
      if (chosen.length > 0) ranges[axis.name] = chosen;
      continue;
    }
    const intervals = axis.brushes.filter((b): b is Interval => !Array.isArray(b));
    if (intervals.length === 0) continue;
    let lo = Math.min(...intervals.map((i) => i.lo));
    let hi = Math.max(...intervals.map((i) => i.hi));
    const outer =
      spec.p_range ??
      (spec.distribution !== "gaussian" && typeof spec.parameters[0] === "number"
        ? (spec.parameters as number[])
        : null);
    if (outer) {
      lo = Math.max(lo, outer[0]);
      hi = Math.min(hi, outer[1]);
    }
    if (lo <= hi) ranges[axis.name] = [lo, hi];
  }
  if (Object.keys(ranges).length === 0) return null;
  return { ranges };
}
