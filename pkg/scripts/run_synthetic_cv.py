#!/usr/bin/env python3
"""Four-fold cross-validation on the planted latent-skill task with the
reference configuration (rank3 loss, beta 0.5, 7 splits, sigma 25, alpha 0.4).
"""

import argparse
import json
import time

from skillrank.datastore import Modality
from skillrank.evaluator import EvalConfig, cross_validate
from skillrank.synthetic import make_latent_skill_task
from skillrank.trainer import LossVariant, default_train_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--videos", type=int, default=40)
    parser.add_argument("--dim", type=int, default=12)
    parser.add_argument("--snr", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--loss", default="rank3", choices=["rank1", "rank2", "rank3"])
    parser.add_argument("--beta", type=float, default=0.5)
    parser.add_argument("--splits", type=int, default=7)
    parser.add_argument("--alpha", type=float, default=0.4)
    parser.add_argument("--sigma", type=int, default=25)
    args = parser.parse_args()

    task = make_latent_skill_task(
        n_videos=args.videos, dim=args.dim, snr=args.snr, seed=args.seed
    )
    cfgs = {
        m: default_train_config(
            m,
            variant=LossVariant(args.loss),
            splits=args.splits,
            beta=args.beta,
            seed=args.seed,
        )
        for m in (Modality.SPATIAL, Modality.TEMPORAL)
    }
    start = time.monotonic()
    result = cross_validate(
        task.dataset,
        task.pairs,
        cfgs,
        EvalConfig(alpha=args.alpha, sigma=args.sigma),
        k=4,
        seed=args.seed,
    )
    print(
        json.dumps(
            {
                "videos": args.videos,
                "snr": args.snr,
                "loss": args.loss,
                "fold_precisions": [round(f.precision, 4) for f in result.folds],
                "mean_precision": round(result.mean_precision, 4),
                "seconds": round(time.monotonic() - start, 2),
            },
            indent=2,
        )
    )


if __name__ == "__main__":
    main()
