import type {
  GoldenExample,
  SessionConfigPayload,
  SessionSummary,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const code = body?.code ?? "http_error";
    const message = body?.message ?? `request failed with ${response.status}`;
    throw new ApiError(response.status, code, message);
  }
  return body as T;
}

export interface SessionApi {
  goldenExample(): Promise<GoldenExample>;
  createSession(dpi: string, config: SessionConfigPayload): Promise<SessionView>;
  getSession(id: string): Promise<SessionView>;
  listSessions(): Promise<SessionSummary[]>;
  answer(id: string, outcome: boolean, idempotencyKey: string): Promise<SessionView>;
}

export class Client implements SessionApi {
  constructor(private baseUrl = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  goldenExample(): Promise<GoldenExample> {
    return fetch(this.url("/golden-example")).then((r) => asJson<GoldenExample>(r));
  }

  createSession(dpi: string, config: SessionConfigPayload): Promise<SessionView> {
    return fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dpi, config }),
    }).then((r) => asJson<SessionView>(r));
  }

  getSession(id: string): Promise<SessionView> {
    return fetch(this.url(`/sessions/${id}`)).then((r) => asJson<SessionView>(r));
  }

  listSessions(): Promise<SessionSummary[]> {
    return fetch(this.url("/sessions")).then((r) => asJson<SessionSummary[]>(r));
  }

  answer(id: string, outcome: boolean, idempotencyKey: string): Promise<SessionView> {
    return fetch(this.url(`/sessions/${id}/answer`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ outcome, idempotency_key: idempotencyKey }),
    }).then((r) => asJson<SessionView>(r));
  }
}
