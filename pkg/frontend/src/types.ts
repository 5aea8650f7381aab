/** Wire types mirroring the annotation service API. */

export type Choice = "i_better" | "j_better";

export interface HitPair {
  i: string;
  j: string;
}

/** Payload of GET /tasks/{task}/hit. Quality-control pairs are not marked. */
export interface HitPayload {
  hit_id: string;
  task_id: string;
  pairs: HitPair[];
  shuffle_seed: number;
}

export interface SubmitAck {
  recorded: number;
  hit_id: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly code: string,
    public readonly status: number,
  ) {
    super(message);
  }
}
