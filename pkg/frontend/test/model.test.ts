import { describe, expect, test } from "vitest";

import {
  axisFraction,
  axisTicks,
  buildAxes,
  fractionToValue,
  histogram,
  matchesBrush,
  mergeTrials,
  paramUnion,
  reconcileAxes,
} from "../src/model.js";
import type { AxisModel } from "../src/model.js";
import { catSpec, config, floatSpec, sessionData, threeSessionFixture, trial } from "./fixtures.js";

describe("merge", () => {
  test("param union keeps first-seen order", () => {
    expect(paramUnion(threeSessionFixture())).toEqual(["lr", "momentum", "depth"]);
  });

  test("rows carry assignments, constants, and nulls", () => {
    const rows = mergeTrials(threeSessionFixture());
    expect(rows).toHaveLength(8);
    const s1 = rows.find((r) => r.key === "s0001/1");
    expect(s1?.values).toEqual({ lr: 0.02, momentum: null, depth: 20 });
    const s2 = rows.find((r) => r.key === "s0002/1");
    expect(s2?.values).toEqual({ lr: 0.03, momentum: 0.9, depth: 20 });
    const s3 = rows.find((r) => r.key === "s0003/1");
    expect(s3?.values).toEqual({ lr: 0.04, momentum: null, depth: 140 });
  });

  test("row keys are unique across sessions with equal trial ids", () => {
    const rows = mergeTrials(threeSessionFixture());
    expect(new Set(rows.map((r) => r.key)).size).toBe(rows.length);
  });

  test("single session merges to an identity view", () => {
    const [s1] = threeSessionFixture();
    const rows = mergeTrials([s1]);
    expect(rows.map((r) => r.trial)).toEqual([1, 2, 3]);
    expect(rows.every((r) => r.session === "s0001")).toBe(true);
  });
});

describe("axes", () => {
  test("one axis per distinct param plus the measure axis, rightmost", () => {
    const sessions = threeSessionFixture();
    const axes = buildAxes(sessions, mergeTrials(sessions));
    expect(axes.map((a) => a.name)).toEqual(["lr", "momentum", "depth", "test/accuracy"]);
    expect(axes.filter((a) => a.kind === "measure")).toHaveLength(1);
    expect(axes[axes.length - 1].kind).toBe("measure");
  });

  test("scales follow the declared distributions", () => {
    const sessions = threeSessionFixture();
    const axes = buildAxes(sessions, mergeTrials(sessions));
    const byName = Object.fromEntries(axes.map((a) => [a.name, a]));
    expect(byName["lr"].scale).toBe("log");
    expect(byName["momentum"].scale).toBe("linear");
    expect(byName["depth"].scale).toBe("linear"); // numeric categories stay numeric
    expect(byName["test/accuracy"].scale).toBe("linear");
  });

  test("string categories make a categorical axis with union order", () => {
    const a = sessionData("s0001", config({ act: catSpec(["relu", "tanh"]) }), [
      trial(1, { act: "relu" }, 0.5),
    ]);
    const b = sessionData("s0002", config({ act: catSpec(["tanh", "gelu"]) }), [
      trial(1, { act: "gelu" }, 0.6),
    ]);
    const axes = buildAxes([a, b], mergeTrials([a, b]));
    expect(axes[0].scale).toBe("categorical");
    expect(axes[0].categories).toEqual(["relu", "tanh", "gelu"]);
  });

  test("domains span rendered values including constants", () => {
    const sessions = threeSessionFixture();
    const axes = buildAxes(sessions, mergeTrials(sessions));
    const byName = Object.fromEntries(axes.map((a) => [a.name, a]));
    expect(byName["lr"].domain).toEqual([0.02, 0.08]);
    expect(byName["depth"].domain).toEqual([20, 140]);
    expect(byName["test/accuracy"].domain).toEqual([0.61, 0.79]);
  });

  test("reconcile keeps brushes and visibility across a rebuild", () => {
    const sessions = threeSessionFixture();
    const rows = mergeTrials(sessions);
    const axes = buildAxes(sessions, rows);
    axes[0].brushes = [{ lo: 0.03, hi: 0.07 }];
    axes[1].visible = false;
    const fresh = reconcileAxes(buildAxes(sessions, rows), axes);
    expect(fresh[0].brushes).toEqual([{ lo: 0.03, hi: 0.07 }]);
    expect(fresh[1].visible).toBe(false);
    expect(fresh[2].brushes).toEqual([]);
  });
});

describe("scales", () => {
  const linear: AxisModel = {
    name: "x",
    kind: "param",
    scale: "linear",
    visible: true,
    brushes: [],
    domain: [10, 30],
    categories: [],
  };

  test("linear fraction and inverse round trip", () => {
    expect(axisFraction(linear, 10)).toBe(0);
    expect(axisFraction(linear, 30)).toBe(1);
    expect(axisFraction(linear, 20)).toBeCloseTo(0.5, 12);
    expect(fractionToValue(linear, 0.25)).toBeCloseTo(15, 12);
  });

  test("log fraction is linear in the exponent", () => {
    const log: AxisModel = { ...linear, scale: "log", domain: [0.001, 0.1] };
    expect(axisFraction(log, 0.01)).toBeCloseTo(0.5, 12);
    expect(fractionToValue(log, 0.5) as number).toBeCloseTo(0.01, 12);
  });

  test("categorical positions index the category list", () => {
    const cat: AxisModel = {
      ...linear,
      scale: "categorical",
      categories: ["a", "b", "c"],
    };
    expect(axisFraction(cat, "a")).toBe(0);
    expect(axisFraction(cat, "c")).toBe(1);
    expect(axisFraction(cat, "b")).toBeCloseTo(0.5, 12);
    expect(axisFraction(cat, "zzz")).toBeNull();
    expect(fractionToValue(cat, 0.49)).toBe("b");
  });

  test("degenerate domain pins to the middle", () => {
    const flat: AxisModel = { ...linear, domain: [7, 7] };
    expect(axisFraction(flat, 7)).toBe(0.5);
  });

  test("missing values have no position", () => {
    expect(axisFraction(linear, null)).toBeNull();
  });

  test("ticks span the domain", () => {
    const ticks = axisTicks(linear) as number[];
    expect(ticks[0]).toBe(10);
    expect(ticks[ticks.length - 1]).toBe(30);
  });
});

describe("brush predicate", () => {
  const axis: AxisModel = {
    name: "x",
    kind: "param",
    scale: "linear",
    visible: true,
    brushes: [],
    domain: [0, 1],
    categories: [],
  };

  test("no brushes passes everything", () => {
    expect(matchesBrush(axis, 0.4)).toBe(true);
    expect(matchesBrush(axis, null)).toBe(true);
  });

  test("interval brush is inclusive and rejects missing values", () => {
    const brushed = { ...axis, brushes: [{ lo: 0.2, hi: 0.6 }] };
    expect(matchesBrush(brushed, 0.2)).toBe(true);
    expect(matchesBrush(brushed, 0.6)).toBe(true);
    expect(matchesBrush(brushed, 0.61)).toBe(false);
    expect(matchesBrush(brushed, null)).toBe(false);
  });

  test("ranges on one axis union", () => {
    const brushed = {
      ...axis,
      brushes: [
        { lo: 0.0, hi: 0.1 },
        { lo: 0.9, hi: 1.0 },
      ],
    };
    expect(matchesBrush(brushed, 0.05)).toBe(true);
    expect(matchesBrush(brushed, 0.95)).toBe(true);
    expect(matchesBrush(brushed, 0.5)).toBe(false);
  });

  test("category subset brush", () => {
    const brushed: AxisModel = {
      ...axis,
      scale: "categorical",
      categories: ["a", "b", "c"],
      brushes: [["a", "c"]],
    };
    expect(matchesBrush(brushed, "a")).toBe(true);
    expect(matchesBrush(brushed, "b")).toBe(false);
  });
});

describe("histogram", () => {
  test("counts every positioned value once", () => {
    const sessions = threeSessionFixture();
    const rows = mergeTrials(sessions);
    const axes = buildAxes(sessions, rows);
    const lr = axes[0];
    const counts = histogram(lr, rows, 6);
    expect(counts).toHaveLength(6);
    expect(counts.reduce((a, b) => a + b, 0)).toBe(rows.length);
  });
});
