/** Typed fetch wrapper for the scoring service.
 *
 * Identical concurrent requests share one in-flight promise and settled
 * responses are cached by the canonical JSON of the request body, so
 * what-if exploration never refires a POST the service already answered.
 * The service is stateless and scoring is deterministic, which is what
 * makes caching by request body sound.
 */

import type {
  ApiReply,
  ModelsResponse,
  ScoreRequest,
  ScoreResponse,
  WhatIfRequest,
  WhatIfResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** JSON.stringify with object keys sorted at every level. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") return JSON.stringify(value);
  if (Array.isArray(value)) {
    return `[${value.map(canonicalJson).join(",")}]`;
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
  return `{${entries.map(([k, v]) => `${JSON.stringify(k)}:${canonicalJson(v)}`).join(",")}}`;
}

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private readonly inFlight = new Map<string, Promise<ApiReply<unknown>>>();
  private readonly settled = new Map<string, ApiReply<unknown>>();

  constructor(baseUrl = "", fetchImpl: FetchLike = (u, i) => fetch(u, i)) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async post<T>(path: string, body: unknown): Promise<ApiReply<T>> {
    const key = `${path} ${canonicalJson(body)}`;
    const done = this.settled.get(key);
    if (done !== undefined) return done as ApiReply<T>;
    const pending = this.inFlight.get(key);
    if (pending !== undefined) return pending as Promise<ApiReply<T>>;

    const promise = (async () => {
      const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
      const reply: ApiReply<unknown> = { status: resp.status, body: await resp.json() };
      this.settled.set(key, reply);
      return reply;
    })();
    this.inFlight.set(key, promise);
    try {
      return (await promise) as ApiReply<T>;
    } finally {
      this.inFlight.delete(key);
    }
  }

  private async get<T>(path: string): Promise<ApiReply<T>> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`);
    return { status: resp.status, body: (await resp.json()) as T };
  }

  score(request: ScoreRequest): Promise<ApiReply<ScoreResponse>> {
    return this.post<ScoreResponse>("/score", request);
  }

  whatIf(request: WhatIfRequest): Promise<ApiReply<WhatIfResponse>> {
    return this.post<WhatIfResponse>("/whatif", request);
  }

  models(): Promise<ApiReply<ModelsResponse>> {
    return this.get<ModelsResponse>("/models");
  }

  health(): Promise<ApiReply<Record<string, unknown>>> {
    return this.get<Record<string, unknown>>("/health");
  }

  /** Number of settled responses held; used by tests and the debug bar. */
  get cacheSize(): number {
    return this.settled.size;
  }

  clearCache(): void {
    this.settled.clear();
  }
}
