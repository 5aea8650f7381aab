/** Deterministic presentation-order shuffling from the server-provided seed,
 * so position bias is controlled but every render is reproducible. */

/** mulberry32: tiny seeded PRNG, plenty for presentation shuffling. */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Fisher-Yates permutation of 0..n-1 driven by the seeded rng. */
export function seededOrder(n: number, rng: () => number): number[] {
  const order = Array.from({ length: n }, (_, k) => k);
  for (let idx = n - 1; idx > 0; idx--) {
    const swap = Math.floor(rng() * (idx + 1));
    [order[idx], order[swap]] = [order[swap], order[idx]];
  }
  return order;
}
