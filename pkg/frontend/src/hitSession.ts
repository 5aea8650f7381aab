import { seededOrder, seededRng } from "./shuffle.js";
import { Choice, HitPayload } from "./types.js";

/** One pair as presented: which screen position it takes and which side of
 * the screen holds video i. Served order is preserved for submission. */
export interface PairView {
  servedIndex: number;
  i: string;
  j: string;
  leftIsI: boolean;
}

/**
 * Selection state for one HIT.
 *
 * Pairs are presented one at a time in a seeded shuffled order with seeded
 * left/right assignment (the seed comes from the server, so the layout is
 * reproducible). Only strict preferences exist: the two actions are "left is
 * better" and "right is better". Nothing is transmitted until submit().
 */
export class HitSession {
  readonly hitId: string;
  readonly presentation: PairView[];
  private readonly selections: (Choice | null)[];
  private cursor = 0;

  constructor(payload: HitPayload) {
    this.hitId = payload.hit_id;
    const rng = seededRng(payload.shuffle_seed);
    const order = seededOrder(payload.pairs.length, rng);
    this.presentation = order.map((servedIndex, position) => ({
      servedIndex,
      i: payload.pairs[servedIndex].i,
      j: payload.pairs[servedIndex].j,
      leftIsI: rng() < 0.5,
    }));
    this.selections = payload.pairs.map(() => null);
  }

  get total(): number {
    return this.presentation.length;
  }

  /** 0-based index of the pair currently on screen. */
  get position(): number {
    return Math.min(this.cursor, this.total - 1);
  }

  get current(): PairView {
    return this.presentation[this.position];
  }

  /** True once every pair has been answered. */
  get reviewing(): boolean {
    return this.cursor >= this.total;
  }

  leftVideo(view: PairView = this.current): string {
    return view.leftIsI ? view.i : view.j;
  }

  rightVideo(view: PairView = this.current): string {
    return view.leftIsI ? view.j : view.i;
  }

  /** Record a strict preference for the pair on screen and advance. */
  select(side: "left" | "right"): void {
    const view = this.current;
    const pickedI = side === "left" ? view.leftIsI : !view.leftIsI;
    this.selections[view.servedIndex] = pickedI ? "i_better" : "j_better";
    if (this.cursor < this.total) {
      this.cursor += 1;
    }
  }

  /** Step back to revisit an earlier pair (selections are kept). */
  back(): void {
    if (this.cursor > 0) {
      this.cursor -= 1;
    }
  }

  answered(): number {
    return this.selections.filter((s) => s !== null).length;
  }

  canSubmit(): boolean {
    return this.selections.every((s) => s !== null);
  }

  /** Choices in served order, for POSTing. Throws while incomplete. */
  choices(): Choice[] {
    if (!this.canSubmit()) {
      throw new Error(
        `cannot submit: ${this.answered()} of ${this.total} pairs answered`,
      );
    }
    return this.selections.map((s) => s as Choice);
  }
}
