/** Typed client for the annotation service. All state lives server-side. */

export interface SessionInfo {
  session_id: string;
  n: number;
  m: number;
  model_names: string[];
  mode: string;
  budget: number;
}

export interface PendingQuery {
  query_id: number;
  step: number;
  budget: number;
  query_text?: string;
  outputs?: string[];
}

export interface AnnotateResult {
  posterior: number[];
  map_best: number;
  empirical_best: number | null;
  step: number;
  budget: number;
}

export interface TrajectoryRow {
  step: number;
  query: number;
  oracle_row: number[];
  posterior: number[];
  map_best: number;
  empirical_best: number | null;
}

export interface Report {
  trajectory: TrajectoryRow[];
  posterior: number[];
  map_best: number;
  empirical_best: number | null;
  step: number;
  budget: number;
  mode: string;
  model_names: string[];
}

export interface StartParams {
  bundle: string;
  tau: number;
  budget: number;
  mode: "live" | "replay";
  reveal_outputs?: boolean;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "connection", `service unreachable: ${String(err)}`);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        (body as { code?: string }).code ?? "unknown",
        (body as { error?: string }).error ?? `HTTP ${response.status}`,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(params: StartParams): Promise<SessionInfo> {
    return this.post<SessionInfo>("/sessions", params);
  }

  nextQuery(sessionId: string): Promise<PendingQuery> {
    return this.request<PendingQuery>(`/sessions/${sessionId}/next`);
  }

  annotate(
    sessionId: string,
    payload: { query_id: number; reference_text?: string; accept_replay?: boolean },
  ): Promise<AnnotateResult> {
    return this.post<AnnotateResult>(`/sessions/${sessionId}/annotate`, payload);
  }

  report(sessionId: string): Promise<Report> {
    return this.request<Report>(`/sessions/${sessionId}/report`);
  }

  deleteSession(sessionId: string): Promise<unknown> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
