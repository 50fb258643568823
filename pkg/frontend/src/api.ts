/**
 * Typed client for the elicitation service.  Every response is validated
 * against its zod schema before the UI sees it.  Choice submission retries
 * on network failure; the server treats resubmission idempotently.
 */
import {
  ChoiceAck,
  ChoiceAckSchema,
  Estimate,
  EstimateSchema,
  NextQuery,
  NextQuerySchema,
  Recommendation,
  RecommendationSchema,
  SessionCreated,
  SessionCreatedSchema,
  SessionInfo,
  SessionInfoSchema,
} from "./schemas.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface ClientOptions {
  baseUrl?: string;
  fetchImpl?: FetchLike;
  /** Retries for idempotent requests that fail at the network level. */
  retries?: number;
}

export class ElicitClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private readonly retries: number;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
    this.retries = options.retries ?? 2;
  }

  private async request(
    path: string,
    init: RequestInit,
    retriable: boolean,
  ): Promise<unknown> {
    let lastError: unknown;
    const attempts = retriable ? this.retries + 1 : 1;
    for (let attempt = 0; attempt < attempts; attempt++) {
      try {
        const res = await this.fetchImpl(this.baseUrl + path, {
          headers: { "content-type": "application/json" },
          ...init,
        });
        if (!res.ok) {
          let detail = res.statusText;
          try {
            const body = (await res.json()) as { detail?: string };
            if (body.detail) detail = body.detail;
          } catch {
            /* non-JSON error body */
          }
          throw new ApiError(res.status, detail);
        }
        return await res.json();
      } catch (err) {
        if (err instanceof ApiError) throw err; // server answered: do not retry
        lastError = err;
      }
    }
    throw lastError;
  }

  async createSession(config: Record<string, unknown> = {}): Promise<SessionCreated> {
    const body = await this.request(
      "/sessions",
      { method: "POST", body: JSON.stringify(config) },
      false,
    );
    return SessionCreatedSchema.parse(body);
  }

  async sessionInfo(sessionId: string): Promise<SessionInfo> {
    const body = await this.request(`/sessions/${sessionId}`, { method: "GET" }, true);
    return SessionInfoSchema.parse(body);
  }

  async nextQuery(sessionId: string): Promise<NextQuery> {
    const body = await this.request(
      `/sessions/${sessionId}/query`,
      { method: "GET" },
      true,
    );
    return NextQuerySchema.parse(body);
  }

  /** Submitting the same (query_id, z) twice is safe: the server dedupes. */
  async submitChoice(sessionId: string, queryId: string, z: 1 | -1): Promise<ChoiceAck> {
    const body = await this.request(
      `/sessions/${sessionId}/choices`,
      { method: "POST", body: JSON.stringify({ query_id: queryId, z }) },
      true,
    );
    return ChoiceAckSchema.parse(body);
  }

  async estimate(sessionId: string): Promise<Estimate> {
    const body = await this.request(
      `/sessions/${sessionId}/estimate`,
      { method: "POST" },
      false,
    );
    return EstimateSchema.parse(body);
  }

  async recommend(
    sessionId: string,
    args: { scenarios_csv: string; budget: string; caps: number[]; delta?: number },
  ): Promise<Recommendation> {
    const body = await this.request(
      `/sessions/${sessionId}/recommend`,
      { method: "POST", body: JSON.stringify(args) },
      false,
    );
    return RecommendationSchema.parse(body);
  }
}
