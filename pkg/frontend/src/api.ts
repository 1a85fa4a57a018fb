import type { Status, TaskDetail, TaskPage, VerdictAck } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface ListQuery {
  status?: Status;
  bucket?: string;
  cursor?: string;
  pageSize?: number;
}

export interface VerdictBody {
  check: string;
  verdict: boolean;
  auditor: string;
  idempotency_key: string;
}

// The surface both screens talk to. Tests substitute an in-memory stub;
// the app uses the fetch implementation against the origin that serves
// the bundle (the audit service itself).
export interface AuditApi {
  listTasks(query?: ListQuery): Promise<TaskPage>;
  getTask(id: string): Promise<TaskDetail>;
  postVerdict(id: string, body: VerdictBody): Promise<VerdictAck>;
}

async function unwrap<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText || `HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { detail?: unknown };
      if (body && typeof body.detail === "string") {
        detail = body.detail;
      }
    } catch {
      // non-JSON error body, keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class FetchAuditApi implements AuditApi {
  constructor(private readonly baseUrl: string = "") {}

  async listTasks(query: ListQuery = {}): Promise<TaskPage> {
    const params = new URLSearchParams();
    if (query.status) params.set("status", query.status);
    if (query.bucket) params.set("bucket", query.bucket);
    if (query.cursor) params.set("cursor", query.cursor);
    if (query.pageSize) params.set("page_size", String(query.pageSize));
    const qs = params.toString();
    return unwrap(await fetch(`${this.baseUrl}/tasks${qs ? `?${qs}` : ""}`));
  }

  async getTask(id: string): Promise<TaskDetail> {
    return unwrap(await fetch(`${this.baseUrl}/tasks/${encodeURIComponent(id)}`));
  }

  async postVerdict(id: string, body: VerdictBody): Promise<VerdictAck> {
    return unwrap(
      await fetch(`${this.baseUrl}/tasks/${encodeURIComponent(id)}/verdicts`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }
}
