import { ApiClient } from "./api.js";
import { HitSession } from "./hitSession.js";
import { ApiError } from "./types.js";

export type Phase =
  | "loading" // fetching the next HIT
  | "annotating" // a HIT is on screen
  | "submitting"
  | "submit_failed" // network trouble; selections kept, retry available
  | "conflict" // duplicate submission: terminal for this HIT
  | "complete"; // no HITs remain

/**
 * Drives the annotate-submit-next loop for one worker. UI layers subscribe
 * via onChange and call select()/submit()/retry().
 */
export class SessionController {
  phase: Phase = "loading";
  session: HitSession | null = null;
  completedHits = 0;
  lastError: string | null = null;
  onChange: () => void = () => {};

  constructor(
    private readonly client: ApiClient,
    private readonly worker: string,
  ) {}

  private emit(): void {
    this.onChange();
  }

  async start(): Promise<void> {
    this.phase = "loading";
    this.emit();
    const payload = await this.client.getHit(this.worker);
    if (payload === null) {
      this.phase = "complete";
      this.session = null;
    } else {
      this.session = new HitSession(payload);
      this.phase = "annotating";
    }
    this.emit();
  }

  select(side: "left" | "right"): void {
    if (this.phase !== "annotating" || this.session === null) {
      throw new Error(`cannot select in phase ${this.phase}`);
    }
    this.session.select(side);
    this.emit();
  }

  back(): void {
    this.session?.back();
    this.emit();
  }

  /** Explicit submission; nothing was sent before this call. */
  async submit(): Promise<void> {
    if (this.session === null || !this.session.canSubmit()) {
      throw new Error("cannot submit an incomplete HIT");
    }
    this.phase = "submitting";
    this.emit();
    try {
      await this.client.submitJudgments(
        this.session.hitId,
        this.worker,
        this.session.choices(),
      );
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.phase = "conflict";
        this.lastError = error.message;
      } else {
        // Keep the session (and its selections) so the worker can retry.
        this.phase = "submit_failed";
        this.lastError = error instanceof Error ? error.message : String(error);
      }
      this.emit();
      return;
    }
    this.completedHits += 1;
    this.lastError = null;
    await this.start();
  }

  async retry(): Promise<void> {
    if (this.phase !== "submit_failed") {
      throw new Error(`nothing to retry in phase ${this.phase}`);
    }
    this.phase = "annotating";
    await this.submit();
  }
}
