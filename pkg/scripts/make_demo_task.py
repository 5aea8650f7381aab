#!/usr/bin/env python3
"""Materialize a synthetic latent-skill task on disk for CLI experiments.

Writes feature files, a manifest (run `skillrank ingest` to add normalization
stats), a pairs file, and the annotation inputs (pairs to annotate + a QC pair)
for the `serve` command.
"""

import argparse
import json
from pathlib import Path

from skillrank.synthetic import make_latent_skill_task, write_pairs_file, write_task


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_task")
    parser.add_argument("--videos", type=int, default=24)
    parser.add_argument("--dim", type=int, default=8)
    parser.add_argument("--snr", type=float, default=10.0)
    parser.add_argument("--tie-pairs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    task = make_latent_skill_task(
        n_videos=args.videos,
        dim=args.dim,
        snr=args.snr,
        seed=args.seed,
        n_tie_pairs=args.tie_pairs,
    )
    manifest = write_task(task, out)
    write_pairs_file(task.pairs, out / "pairs.jsonl")

    # Annotation inputs: the ordered pairs as unlabeled comparisons, plus one
    # obvious QC pair (best vs worst by planted skill).
    with open(out / "annotate.jsonl", "w") as fh:
        for pair in task.pairs.psi[: min(len(task.pairs.psi), 16)]:
            fh.write(json.dumps({"i": pair.i, "j": pair.j}) + "\n")
    ranked = sorted(task.skills, key=task.skills.get)
    qc = [{"i": ranked[-1], "j": ranked[0], "winner": ranked[-1]}]
    (out / "qc.json").write_text(json.dumps(qc, indent=2))

    print(json.dumps({"manifest": str(manifest), "videos": args.videos}, indent=2))


if __name__ == "__main__":
    main()
