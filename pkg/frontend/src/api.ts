// Thin typed client over the service's JSON API. All retrieval and scoring
// happens server-side; this module only moves JSON.

import {
  ApiError,
  ChatRequestBody,
  ChatResponse,
  ChunkResponse,
  HealthResponse,
} from "./types";

export interface ChatApi {
  chat(body: ChatRequestBody): Promise<ChatResponse>;
  chunk(docName: string, chunkId: number): Promise<ChunkResponse>;
  health(): Promise<HealthResponse>;
}

type FetchLike = typeof fetch;

export class HttpChatApi implements ChatApi {
  constructor(
    private readonly baseUrl: () => string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const base = this.baseUrl().replace(/\/+$/, "");
    let response: Response;
    try {
      response = await this.fetchImpl(base + path, init);
    } catch (err) {
      throw new ApiError("network_error", String(err), 0);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      // non-JSON bodies fall through to the generic error below
    }
    if (!response.ok) {
      const body = payload as { code?: string; message?: string } | null;
      throw new ApiError(
        body?.code ?? "http_error",
        body?.message ?? response.statusText,
        response.status,
      );
    }
    return payload as T;
  }

  chat(body: ChatRequestBody): Promise<ChatResponse> {
    return this.request<ChatResponse>("/api/chat", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  chunk(docName: string, chunkId: number): Promise<ChunkResponse> {
    const name = docName.split("/").map(encodeURIComponent).join("/");
    return this.request<ChunkResponse>(`/api/chunk/${name}/${chunkId}`);
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/api/health");
  }
}
