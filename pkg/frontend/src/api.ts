/** Thin fetch client over the chopt API; every view reads through here. */

import type {
  ApiErrorBody,
  ClusterJson,
  RerunRequest,
  SessionDetail,
  SessionListItem,
  TopTrialJson,
  TrialsResponse,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  code: ApiErrorBody["code"];
  field: string | null;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.field = body.field;
  }
}

async function check<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let body: ApiErrorBody;
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      body = { code: "parse", field: null, message: response.statusText };
    }
    throw new ApiError(response.status, body);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async listSessions(status?: string): Promise<SessionListItem[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    const body = await check<{ sessions: SessionListItem[] }>(
      await fetch(this.url(`/sessions${query}`)),
    );
    return body.sessions;
  }

  async session(id: string): Promise<SessionDetail> {
    return check(await fetch(this.url(`/sessions/${id}`)));
  }

  async trials(id: string): Promise<TrialsResponse> {
    return check(await fetch(this.url(`/sessions/${id}/trials`)));
  }

  async top(id: string, k: number): Promise<TopTrialJson[]> {
    const body = await check<{ session: string; trials: TopTrialJson[] }>(
      await fetch(this.url(`/sessions/${id}/top?k=${k}`)),
    );
    return body.trials;
  }

  async submit(configText: string): Promise<string> {
    const body = await check<{ id: string }>(
      await fetch(this.url("/sessions"), { method: "POST", body: configText }),
    );
    return body.id;
  }

  async rerun(id: string, request: RerunRequest): Promise<{ id: string; base: string }> {
    return check(
      await fetch(this.url(`/sessions/${id}/rerun`), {
        method: "POST",
        body: JSON.stringify(request),
      }),
    );
  }

  async stop(id: string): Promise<{ id: string; status: string }> {
    return check(await fetch(this.url(`/sessions/${id}/stop`), { method: "POST" }));
  }

  async ticks(n: number): Promise<number> {
    const body = await check<{ tick: number }>(
      await fetch(this.url("/ticks"), { method: "POST", body: JSON.stringify({ n }) }),
    );
    return body.tick;
  }

  async cluster(): Promise<ClusterJson> {
    return check(await fetch(this.url("/cluster")));
  }

  exportUrl(ids: string[], format: "csv" | "jsonl"): string {
    return this.url(`/export?ids=${ids.join(",")}&format=${format}`);
  }
}
