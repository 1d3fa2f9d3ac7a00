import { describe, expect, test } from "vitest";

import { buildAxes, mergeTrials } from "../src/model.js";
import {
  brushSelection,
  emptySelection,
  maskTopK,
  rankRows,
  selectedRows,
  toggleManual,
} from "../src/selection.js";
import { buildRerun, rerunFromBrushes } from "../src/rerun.js";
import { catSpec, config, floatSpec, sessionData, threeSessionFixture, trial } from "./fixtures.js";

function fixtureRows() {
  const sessions = threeSessionFixture();
  const rows = mergeTrials(sessions);
  const axes = buildAxes(sessions, rows);
  return { sessions, rows, axes };
}

describe("ranking", () => {
  test("descending ranks best metric first and skips unscored trials", () => {
    const { rows } = fixtureRows();
    const ranked = rankRows(rows, "descending");
    expect(ranked.map((r) => r.key)).toEqual([
      "s0003/1",
      "s0001/2",
      "s0002/1",
      "s0001/3",
      "s0002/2",
      "s0003/2",
      "s0001/1",
    ]);
  });

  test("ascending inverts the order", () => {
    const { rows } = fixtureRows();
    const ranked = rankRows(rows, "ascending");
    expect(ranked[0].key).toBe("s0001/1");
    expect(ranked[ranked.length - 1].key).toBe("s0003/1");
  });

  test("metric ties break by session then trial id", () => {
    const a = sessionData("s0001", config({ x: floatSpec(0, 1) }), [
      trial(2, { x: 0.2 }, 0.5),
      trial(1, { x: 0.1 }, 0.5),
    ]);
    const b = sessionData("s0002", config({ x: floatSpec(0, 1) }), [
      trial(1, { x: 0.3 }, 0.5),
    ]);
    const ranked = rankRows(mergeTrials([a, b]), "descending");
    expect(ranked.map((r) => r.key)).toEqual(["s0001/1", "s0001/2", "s0002/1"]);
  });
});

describe("top-k mask", () => {
  test("selects exactly min(k, scored)", () => {
    const { rows } = fixtureRows();
    expect(maskTopK(rows, "descending", 3).ids.size).toBe(3);
    expect(maskTopK(rows, "descending", 0).ids.size).toBe(0);
    // 8 rows but only 7 scored: k saturates at the scored count
    expect(maskTopK(rows, "descending", 99).ids.size).toBe(7);
  });

  test("keeps the best rows", () => {
    const { rows } = fixtureRows();
    const picked = maskTopK(rows, "descending", 2);
    expect([...picked.ids].sort()).toEqual(["s0001/2", "s0003/1"]);
    expect(picked.source).toEqual({ kind: "topK", k: 2 });
  });
});

describe("brush selection", () => {
  test("no brushed axes selects the full set", () => {
    const { rows, axes } = fixtureRows();
    expect(brushSelection(rows, axes).ids.size).toBe(rows.length);
  });

  test("brushes on different axes intersect", () => {
    const { rows, axes } = fixtureRows();
    const lr = axes.find((a) => a.name === "lr")!;
    const depth = axes.find((a) => a.name === "depth")!;
    lr.brushes = [{ lo: 0.03, hi: 0.08 }];
    let picked = brushSelection(rows, axes);
    expect([...picked.ids].sort()).toEqual([
      "s0001/2",
      "s0001/3",
      "s0002/1",
      "s0002/2",
      "s0003/1",
      "s0003/2",
    ]);
    depth.brushes = [{ lo: 100, hi: 140 }];
    picked = brushSelection(rows, axes);
    expect([...picked.ids].sort()).toEqual(["s0003/1"]);
  });

  test("clearing brushes restores the full set", () => {
    const { rows, axes } = fixtureRows();
    axes[0].brushes = [{ lo: 0.0, hi: 0.001 }];
    expect(brushSelection(rows, axes).ids.size).toBe(0);
    axes[0].brushes = [];
    expect(brushSelection(rows, axes).ids.size).toBe(rows.length);
  });

  test("top-k after brushing equals top-k of the brushed subset", () => {
    const { rows, axes } = fixtureRows();
    const lr = axes.find((a) => a.name === "lr")!;
    lr.brushes = [{ lo: 0.03, hi: 0.08 }];
    const brushed = selectedRows(rows, brushSelection(rows, axes));
    const viaSubset = maskTopK(brushed, "descending", 3);
    const viaRestriction = maskTopK(
      rows.filter((r) => brushed.some((b) => b.key === r.key)),
      "descending",
      3,
    );
    expect([...viaSubset.ids].sort()).toEqual([...viaRestriction.ids].sort());
    // and it differs from masking first, then brushing away rows
    const maskedFirst = maskTopK(rows, "descending", 3);
    const intersected = [...maskedFirst.ids].filter((k) => brushed.some((b) => b.key === k));
    expect(intersected.length).toBeLessThanOrEqual(viaSubset.ids.size);
  });
});

describe("manual picks", () => {
  test("toggle adds then removes", () => {
    let sel = emptySelection();
    sel = toggleManual(sel, "s0001/1");
    expect(sel.ids.has("s0001/1")).toBe(true);
    expect(sel.source).toEqual({ kind: "manual" });
    sel = toggleManual(sel, "s0001/1");
    expect(sel.ids.size).toBe(0);
  });

  test("selected rows restrict to loaded rows", () => {
    const { rows } = fixtureRows();
    const sel = { ids: new Set(["s0001/1", "ghost/9"]), source: { kind: "manual" as const } };
    expect(selectedRows(rows, sel).map((r) => r.key)).toEqual(["s0001/1"]);
  });
});

describe("rerun requests", () => {
  test("selection extents prefill numeric ranges", () => {
    const { sessions, rows } = fixtureRows();
    const picked = rows.filter((r) => r.session === "s0001" && r.trial !== 1);
    const request = buildRerun(picked, sessions[0].config);
    expect(request).toEqual({ ranges: { lr: [0.05, 0.08] } });
  });

  test("categorical params narrow to the selected subset in declared order", () => {
    const { sessions, rows } = fixtureRows();
    const s3 = sessions[2];
    const picked = rows.filter((r) => r.session === "s0003");
    const request = buildRerun(picked, s3.config);
    expect(request?.ranges?.depth).toEqual([20, 140]);
    const deepOnly = rows.filter((r) => r.key === "s0003/1");
    expect(buildRerun(deepOnly, s3.config)?.ranges?.depth).toEqual([140]);
  });

  test("empty selection disables the action", () => {
    const { sessions } = fixtureRows();
    expect(buildRerun([], sessions[0].config)).toBeNull();
  });

  test("brushed ranges become the new space verbatim", () => {
    const { sessions, axes } = fixtureRows();
    const lr = axes.find((a) => a.name === "lr")!;
    lr.brushes = [{ lo: 0.02, hi: 0.06 }];
    const request = rerunFromBrushes(axes, sessions[0].config);
    expect(request).toEqual({ ranges: { lr: [0.02, 0.06] } });
  });

  test("brushed ranges clip to the parameter's outer bounds", () => {
    const { sessions, axes } = fixtureRows();
    const lr = axes.find((a) => a.name === "lr")!;
    lr.brushes = [{ lo: 0.0, hi: 0.5 }];
    // s0001 declares p_range [0.001, 0.1]
    const request = rerunFromBrushes(axes, sessions[0].config);
    expect(request?.ranges?.lr).toEqual([0.001, 0.1]);
  });

  test("disjoint intervals on one axis span", () => {
    const { sessions, axes } = fixtureRows();
    const lr = axes.find((a) => a.name === "lr")!;
    lr.brushes = [
      { lo: 0.01, hi: 0.02 },
      { lo: 0.05, hi: 0.09 },
    ];
    expect(rerunFromBrushes(axes, sessions[0].config)?.ranges?.lr).toEqual([0.01, 0.09]);
  });

  test("brushes on params the base does not tune are ignored", () => {
    const { sessions, axes } = fixtureRows();
    const momentum = axes.find((a) => a.name === "momentum")!;
    momentum.brushes = [{ lo: 0.6, hi: 0.8 }];
    // s0001 tunes only lr
    expect(rerunFromBrushes(axes, sessions[0].config)).toBeNull();
  });

  test("categorical brush narrows to brushed categories", () => {
    const base = config({ act: catSpec(["relu", "tanh", "gelu"]) });
    const axes = buildAxes(
      [sessionData("s0001", base, [trial(1, { act: "relu" }, 0.5)])],
      mergeTrials([sessionData("s0001", base, [trial(1, { act: "relu" }, 0.5)])]),
    );
    axes[0].brushes = [["tanh", "relu"]];
    const request = rerunFromBrushes(axes, base);
    expect(request?.ranges?.act).toEqual(["relu", "tanh"]);
  });
});
