/** Payload shapes of the chopt HTTP API, as served. */

export type ParamValue = number | string;

export interface ParamSpecJson {
  parameters: ParamValue[];
  distribution: "uniform" | "log_uniform" | "gaussian" | "categorical";
  type: "float" | "int" | "str";
  p_range?: number[];
}

export interface ConfigJson {
  h_params: Record<string, ParamSpecJson>;
  measure: string;
  order: "ascending" | "descending";
  step: number;
  population: number;
  stop_ratio: number;
  tune: Record<string, Record<string, unknown>>;
  termination: Record<string, number>;
  workload?: Record<string, unknown>;
  constants?: Record<string, ParamValue>;
  seed?: number;
  h_params_conditions?: unknown[];
  h_params_conjunctions?: unknown[];
}

export interface BestJson {
  trial: number;
  metric: number;
}

export interface SessionListItem {
  id: string;
  status: string;
  reason: string | null;
  agent: string | null;
  grant: number;
  trials_created: number;
  measure: string;
  order: "ascending" | "descending";
  best: BestJson | null;
}

export interface SessionDetail extends SessionListItem {
  started_at: number | null;
  base_session: string | null;
  events: { first_seq: number; last_seq: number };
  config: ConfigJson;
}

export interface TrialJson {
  id: number;
  assignment: Record<string, ParamValue>;
  state: string;
  epochs: number;
  metric: number | null;
  lineage: number | null;
  history: [number, number][];
}

export interface TrialsResponse {
  session: string;
  measure: string;
  order: "ascending" | "descending";
  trials: TrialJson[];
  lineage: { child: number; parent: number }[];
}

export interface TopTrialJson {
  id: number;
  assignment: Record<string, ParamValue>;
  state: string;
  epochs: number;
  metric: number | null;
  lineage: number | null;
}

export interface AgentJson {
  id: string;
  alive: boolean;
  last_heartbeat: number;
  sessions: string[];
}

export interface ClusterJson {
  tick: number;
  capacity: number;
  headroom: number;
  chopt_cap: number;
  non_chopt_used: number;
  grants: Record<string, number>;
  utilization: number;
  master: string | null;
  queue: string[];
  agents: AgentJson[];
}

export interface RerunRequest {
  ranges?: Record<string, ParamValue[]>;
  append?: Record<string, unknown>[];
  overrides?: Record<string, unknown>;
}

export interface ApiErrorBody {
  code: "parse" | "validation" | "not_found" | "conflict";
  field: string | null;
  message: string;
}
