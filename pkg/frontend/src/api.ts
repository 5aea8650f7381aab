import { ApiError, Choice, HitPayload, SubmitAck } from "./types.js";

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin client over the annotation service HTTP API. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly taskId: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  mediaUrl(videoId: string): string {
    return `${this.baseUrl}/media/${encodeURIComponent(videoId)}`;
  }

  /** Next HIT for this worker, or null when none remain. */
  async getHit(worker: string): Promise<HitPayload | null> {
    const url = `${this.baseUrl}/tasks/${this.taskId}/hit?worker=${encodeURIComponent(worker)}`;
    const response = await this.fetchImpl(url);
    if (response.status === 404) {
      const body = await response.json().catch(() => ({}));
      if (body.error === "no_hits_remaining") {
        return null;
      }
      throw new ApiError(body.message ?? "not found", body.error ?? "not_found", 404);
    }
    if (!response.ok) {
      throw await this.asError(response);
    }
    return (await response.json()) as HitPayload;
  }

  async submitJudgments(
    hitId: string,
    worker: string,
    choices: Choice[],
  ): Promise<SubmitAck> {
    const url = `${this.baseUrl}/tasks/${this.taskId}/hits/${hitId}/judgments`;
    const response = await this.fetchImpl(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ worker, choices }),
    });
    if (!response.ok) {
      throw await this.asError(response);
    }
    return (await response.json()) as SubmitAck;
  }

  async exportJudgments(): Promise<string> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/tasks/${this.taskId}/judgments.jsonl`,
    );
    if (!response.ok) {
      throw await this.asError(response);
    }
    return response.text();
  }

  private async asError(response: Response): Promise<ApiError> {
    const body = await response.json().catch(() => ({}));
    return new ApiError(
      body.message ?? response.statusText,
      body.error ?? `http_${response.status}`,
      response.status,
    );
  }
}
