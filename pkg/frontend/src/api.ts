import type { SchemaDoc, SessionCreated, TranscriptDoc, UtteranceDoc } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class Api {
  constructor(
    private readonly base = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body: unknown = await resp.json();
        if (
          typeof body === "object" && body !== null &&
          typeof (body as { detail?: unknown }).detail === "string"
        ) {
          detail = (body as { detail: string }).detail;
        }
      } catch {
        // non-JSON error body, keep the status line
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
  }

  createSession(): Promise<SessionCreated> {
    return this.request("/api/v1/session", { method: "POST" });
  }

  sendUtterance(sessionId: string, text: string): Promise<UtteranceDoc> {
    return this.request(`/api/v1/session/${sessionId}/utterance`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getSession(sessionId: string): Promise<TranscriptDoc> {
    return this.request(`/api/v1/session/${sessionId}`);
  }

  deleteSession(sessionId: string): Promise<{ deleted: string }> {
    return this.request(`/api/v1/session/${sessionId}`, { method: "DELETE" });
  }

  getSchema(): Promise<SchemaDoc> {
    return this.request("/api/v1/schema");
  }
}
