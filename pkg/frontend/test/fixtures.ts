/** Hand-built session payloads for the unit tests. */

import type { SessionData } from "../src/model.js";
import type { ConfigJson, ParamSpecJson, ParamValue, TrialJson } from "../src/types.js";

export function floatSpec(lo: number, hi: number, distribution = "uniform"): ParamSpecJson {
  return {
    parameters: [lo, hi],
    distribution: distribution as ParamSpecJson["distribution"],
    type: "float",
  };
}

export function catSpec(values: ParamValue[], type: "str" | "int" = "str"): ParamSpecJson {
  return { parameters: values, distribution: "categorical", type };
}

export function config(
  h_params: Record<string, ParamSpecJson>,
  overrides: Partial<ConfigJson> = {},
): ConfigJson {
  return {
    h_params,
    measure: "test/accuracy",
    order: "descending",
    step: -1,
    population: 4,
    stop_ratio: 0.0,
    tune: { random_search: {} },
    termination: { max_session_number: 8 },
    ...overrides,
  };
}

export function trial(
  id: number,
  assignment: Record<string, ParamValue>,
  metric: number | null,
  extra: Partial<TrialJson> = {},
): TrialJson {
  return {
    id,
    assignment,
    state: "finished",
    epochs: 30,
    metric,
    lineage: null,
    history: metric === null ? [] : [[30, metric]],
    ...extra,
  };
}

export function sessionData(
  id: string,
  cfg: ConfigJson,
  trials: TrialJson[],
): SessionData {
  return { id, config: cfg, trials };
}

/** Two sessions sharing lr; the second pins depth, the third tunes it. */
export function threeSessionFixture(): SessionData[] {
  const s1 = sessionData(
    "s0001",
    config({ lr: { ...floatSpec(0.01, 0.09, "log_uniform"), p_range: [0.001, 0.1] } }, {
      constants: { depth: 20 },
    }),
    [
      trial(1, { lr: 0.02 }, 0.61),
      trial(2, { lr: 0.05 }, 0.74),
      trial(3, { lr: 0.08 }, 0.68),
    ],
  );
  const s2 = sessionData(
    "s0002",
    config(
      { lr: floatSpec(0.01, 0.09, "log_uniform"), momentum: floatSpec(0.5, 0.99) },
      { constants: { depth: 20 } },
    ),
    [
      trial(1, { lr: 0.03, momentum: 0.9 }, 0.71),
      trial(2, { lr: 0.06, momentum: 0.6 }, 0.66),
    ],
  );
  const s3 = sessionData(
    "s0003",
    config({ lr: floatSpec(0.01, 0.09, "log_uniform"), depth: catSpec([20, 140], "int") }),
    [
      trial(1, { lr: 0.04, depth: 140 }, 0.79),
      trial(2, { lr: 0.07, depth: 20 }, 0.63),
      trial(3, { lr: 0.02, depth: 140 }, null, { state: "running", epochs: 12, history: [] }),
    ],
  );
  return [s1, s2, s3];
}
