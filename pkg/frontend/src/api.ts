/**
 * Typed client for the elicitation service. The UI performs no weight or
 * consistency math of its own: every displayed number comes from one of
 * these responses.
 */

export interface HierarchyNode {
  name: string;
  label: string;
  question?: string;
  metric_group?: string;
  children?: HierarchyNode[];
}

export interface GroupInfo {
  path: string;
  label: string;
  question: string;
  items: { name: string; label: string }[];
  pairs: number;
}

export interface HierarchyPayload {
  schema_version: number;
  hierarchy: HierarchyNode;
  groups: GroupInfo[];
  scale: number[];
}

export interface JudgmentResult {
  schema_version: number;
  group: string;
  complete: boolean;
  cr: number | null;
  weights: Record<string, number> | null;
  status: string;
}

export interface GroupState {
  judgments: { item_a: string; item_b: string; ratio: number }[];
  complete: boolean;
  cr: number | null;
  weights: Record<string, number> | null;
}

export interface SessionState {
  schema_version: number;
  session_id: string;
  expert_id: string;
  status: string;
  groups: Record<string, GroupState>;
}

export interface ConsistencyPayload {
  schema_version: number;
  groups: Record<string, number | null>;
  status: string;
  consistent: boolean;
}

export interface AggregatePayload {
  schema_version: number;
  weight_model: {
    local_weights: Record<string, Record<string, number>>;
    global_leaf_weights: Record<string, number>;
  };
  kendalls_w: number | null;
  strong_agreement: boolean;
}

/** Service error with the body's detail kept verbatim for display. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let detail: unknown = response.statusText;
  try {
    const body = await response.json();
    detail = body.detail ?? body;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.url(path), {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return parseOrThrow<T>(response);
  }

  getHierarchy(): Promise<HierarchyPayload> {
    return this.request("GET", "/hierarchy");
  }

  createSession(expertId: string): Promise<{ session_id: string; status: string }> {
    return this.request("POST", "/sessions", { expert_id: expertId });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  putJudgment(
    sessionId: string,
    judgment: { group: string; item_a: string; item_b: string; ratio: number },
  ): Promise<JudgmentResult> {
    return this.request("PUT", `/sessions/${sessionId}/judgments`, judgment);
  }

  getConsistency(sessionId: string): Promise<ConsistencyPayload> {
    return this.request("GET", `/sessions/${sessionId}/consistency`);
  }

  submit(sessionId: string): Promise<{ status: string }> {
    return this.request("POST", `/sessions/${sessionId}/submit`);
  }

  aggregate(sessionIds: string[]): Promise<AggregatePayload> {
    return this.request("POST", "/aggregate", { session_ids: sessionIds });
  }
}
