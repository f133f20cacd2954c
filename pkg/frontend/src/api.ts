// Typed client for the sandbox HTTP API.

import type {
  MetricsReport,
  MutationResponse,
  OpinionPayload,
  PlanDoc,
  ResidentSummary,
  ScenarioDoc,
  SessionInfo,
  TranscriptPage,
  Violation,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  kind: string;

  constructor(status: number, kind: string, message: string) {
    super(message);
    this.status = status;
    this.kind = kind;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let kind = "http_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.detail) {
      kind = body.detail.type ?? kind;
      message = body.detail.message ?? message;
    }
  } catch {
    // non-JSON error body; keep defaults
  }
  return new ApiError(response.status, kind, message);
}

export class ApiClient {
  base: string;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  session(): Promise<SessionInfo> {
    return this.request("/session");
  }

  scenario(): Promise<ScenarioDoc> {
    return this.request("/scenario");
  }

  plan(): Promise<{ version: number; plan: PlanDoc }> {
    return this.request("/plan");
  }

  metrics(): Promise<MetricsReport> {
    return this.request("/metrics");
  }

  trajectory(): Promise<{ steps: MetricsReport[] }> {
    return this.request("/trajectory");
  }

  violations(): Promise<{ violations: Violation[] }> {
    return this.request("/violations");
  }

  transcript(after: number): Promise<TranscriptPage> {
    return this.request(`/transcript?after=${after}`);
  }

  residents(subCommunity?: number): Promise<{ residents: ResidentSummary[] }> {
    const query = subCommunity === undefined ? "" : `?sub_community=${subCommunity}`;
    return this.request(`/residents${query}`);
  }

  edit(
    edits: Array<{ plot_id: number; land_use: string }>,
    expectedVersion?: number,
  ): Promise<MutationResponse> {
    const body: Record<string, unknown> = { edits };
    if (expectedVersion !== undefined) body.expected_version = expectedVersion;
    return this.post("/plan/edits", body);
  }

  undo(): Promise<MutationResponse> {
    return this.post("/plan/undo", {});
  }

  discuss(subCommunity: number): Promise<MutationResponse> {
    return this.post(`/discuss/${subCommunity}`, {});
  }

  ask(residentId: number): Promise<{ opinion: OpinionPayload; version: number }> {
    return this.post(`/residents/${residentId}/ask`, {});
  }

  export(): Promise<unknown> {
    return this.request("/export");
  }
}
