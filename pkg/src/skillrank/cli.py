"""Command-line pipeline: ingest features, process annotations, train, evaluate,
sweep, serve annotation HITs, and emit reports.

Every command is replayable: outputs land under a run directory together with
a run manifest (config + seeds + input digests), all randomness flows from one
root seed, and no report carries a timestamp.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import annotation, baseline, evaluator, scorer, trainer
from .datastore import (
    Modality,
    compute_normalization,
    load_feature_sequence,
    validate_dataset,
    write_manifest,
)
from .errors import CyclicGraphError, SkillRankError
from .sampler import SnippetMode
from .seeding import derive_seed

MODALITIES = (Modality.SPATIAL, Modality.TEMPORAL)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(doc, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _print(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _run_dir(args) -> Path:
    out = Path(args.out_dir)
    for sub in ("params", "reports", "traces"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    return out


def _write_run_manifest(args, out_dir: Path, command: str, inputs: list[str | Path]) -> None:
    config = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")
    }
    doc = {
        "command": command,
        "config": {k: str(v) if isinstance(v, Path) else v for k, v in config.items()},
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if p and Path(p).exists()},
    }
    _dump_json(doc, out_dir / "run_manifest.json")


def _parse_schedule(text: str) -> tuple[tuple[int, float], ...]:
    try:
        return tuple(
            (int(part.split(":")[0]), float(part.split(":")[1]))
            for part in text.split(",")
        )
    except (ValueError, IndexError):
        raise SkillRankError(f"bad schedule {text!r}; expected 'iter:lr,iter:lr,...'")


def _parse_hidden(text: str | None) -> tuple[int, ...] | None:
    if text is None or text == "":
        return None
    if text == "linear":
        return ()
    return tuple(int(w) for w in text.split(","))


def _arch_for(args, dim: int) -> scorer.Architecture:
    hidden = _parse_hidden(getattr(args, "hidden", None))
    dropout = getattr(args, "dropout", 0.0)
    if hidden is None:
        arch = scorer.default_architecture(dim, activation=args.activation)
        return scorer.Architecture(
            input_dim=arch.input_dim,
            hidden=arch.hidden,
            activation=arch.activation,
            dropout=dropout,
        )
    return scorer.Architecture(
        input_dim=dim, hidden=hidden, activation=args.activation, dropout=dropout
    )


def _train_config(args, modality: Modality) -> trainer.TrainConfig:
    name = modality.value
    schedule = getattr(args, f"lr_schedule_{name}", None)
    iterations = getattr(args, f"iterations_{name}", None)
    if modality is Modality.SPATIAL:
        default_schedule = trainer.DESK_SPATIAL_SCHEDULE
        default_iterations = trainer.DESK_SPATIAL_ITERATIONS
    else:
        default_schedule = trainer.DESK_TEMPORAL_SCHEDULE
        default_iterations = trainer.DESK_TEMPORAL_ITERATIONS
    return trainer.TrainConfig(
        variant=args.loss,
        margin=args.margin,
        splits=args.splits,
        beta=args.beta,
        batch_size=args.batch_size,
        momentum=args.momentum,
        lr_schedule=_parse_schedule(schedule) if schedule else default_schedule,
        max_iterations=iterations if iterations else default_iterations,
        seed=args.seed,
    )


def _eval_config(args) -> evaluator.EvalConfig:
    return evaluator.EvalConfig(
        alpha=args.alpha,
        sigma=args.sigma,
        mode=SnippetMode(args.mode),
        seed=derive_seed(args.seed, "eval"),
    )


def _read_qc_truth(path) -> dict:
    doc = json.loads(Path(path).read_text())
    return {annotation.pair_key(e["i"], e["j"]): e["winner"] for e in doc}


def _bucket_report(buckets) -> dict:
    return {
        str(sep): {"accuracy": b.accuracy, "correct": b.correct, "total": b.total}
        for sep, b in buckets.items()
    }


def _write_curve_csv(path: Path, header: tuple[str, str], points) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for x, y in points:
            writer.writerow([x, y])


# --- commands ---------------------------------------------------------------


def cmd_ingest(args) -> None:
    dataset = validate_dataset(args.manifest)
    doc = json.loads(Path(args.manifest).read_text())
    base = Path(args.manifest).parent
    normalization = {}
    for modality in dataset.modalities:
        raw = [
            load_feature_sequence(
                base / entry["files"][modality.value],
                video_id=entry["id"],
                modality=modality,
            )
            for entry in doc["videos"]
        ]
        mean, std = compute_normalization(raw)
        normalization[modality.value] = {
            "mean": [float(v) for v in mean],
            "std": [float(v) for v in std],
        }
    doc["normalization"] = normalization
    out = Path(args.out)
    write_manifest(doc, out)
    _print(
        {
            "task_id": dataset.task_id,
            "videos": len(dataset.videos),
            "modalities": [m.value for m in dataset.modalities],
            "dims": {m.value: dataset.dim(m) for m in dataset.modalities},
            "manifest": str(out),
        }
    )


def cmd_consensus(args) -> None:
    lines = Path(args.judgments).read_text().splitlines()
    judgments = [annotation.Judgment.from_json(line) for line in lines if line.strip()]
    qc_truth = _read_qc_truth(args.qc_truth) if args.qc_truth else {}
    survivors = annotation.qc_filter(judgments, qc_truth)
    dropped_workers = sorted(
        {j.worker_id for j in judgments} - {j.worker_id for j in survivors}
    )
    outcomes = annotation.consensus(survivors, workers_per_pair=args.workers_per_pair)
    psi = annotation.consistent_pairs(outcomes)
    inconsistent = annotation.inconsistent_pairs(outcomes)

    excluded = []
    if args.cycle_resolution:
        drop = {tuple(edge) for edge in json.loads(Path(args.cycle_resolution).read_text())}
        excluded = [p for p in psi if (p.i, p.j) in drop]
        psi = [p for p in psi if (p.i, p.j) not in drop]

    graph = annotation.build_pair_graph(psi)
    cycles = annotation.find_cycles(graph)
    if cycles:
        raise CyclicGraphError(
            "consistent pairs contain triangular inconsistencies; list the edges to "
            "drop in a cycle-resolution file",
            cycles=cycles,
        )
    phi = annotation.similar_pairs(graph, inconsistent)
    pairs = annotation.PairSets(psi=psi, phi=phi)
    annotation.write_pairs(pairs, args.out)
    _print(
        {
            "judgments": len(judgments),
            "workers_dropped": dropped_workers,
            "judgments_dropped": len(judgments) - len(survivors),
            "pairs_judged": len(outcomes),
            "consistent": len(psi),
            "inconsistent": len(inconsistent),
            "excluded_by_resolution": len(excluded),
            "similar": len(phi),
            "pairs_file": str(args.out),
        }
    )


def cmd_graph_check(args) -> None:
    pairs = annotation.read_pairs(args.pairs)
    graph = annotation.build_pair_graph(pairs.psi)
    cycles = annotation.find_cycles(graph)
    if cycles:
        raise CyclicGraphError(f"{len(cycles)} cycle(s) found", cycles=cycles)
    ranks = annotation.longest_path_ranks(graph)
    _print(
        {
            "nodes": len(graph.nodes),
            "edges": len(graph.edges),
            "acyclic": True,
            "max_rank": max(ranks.values()) if ranks else 0,
        }
    )


def cmd_folds(args) -> None:
    dataset = validate_dataset(args.manifest)
    folds = annotation.make_folds(dataset.videos, args.k, derive_seed(args.seed, "folds"))
    doc = {"task_id": dataset.task_id, "k": args.k, "seed": args.seed, "folds": folds}
    _dump_json(doc, Path(args.out))
    _print({"k": args.k, "sizes": [len(f) for f in folds], "folds_file": str(args.out)})


def cmd_train(args) -> None:
    out = _run_dir(args)
    dataset = validate_dataset(args.manifest)
    pairs = annotation.read_pairs(args.pairs)
    modality = Modality(args.modality)
    cfg = _train_config(args, modality)
    arch = _arch_for(args, dataset.dim(modality))
    result = trainer.train_stream(dataset, modality, pairs.psi, pairs.phi, cfg, arch=arch)
    params_path = out / "params" / f"{modality.value}.skp"
    scorer.save_params(result.params, params_path)
    trainer.write_trace(result.trace, out / "traces" / f"{modality.value}.jsonl")
    _write_run_manifest(args, out, "train", [args.manifest, args.pairs])
    _print(
        {
            "modality": modality.value,
            "iterations": len(result.trace),
            "final_loss": result.trace[-1].loss,
            "params": str(params_path),
        }
    )


def _load_both_params(args) -> dict[Modality, scorer.ScorerParams]:
    return {
        Modality.SPATIAL: scorer.load_params(args.params_spatial)[0],
        Modality.TEMPORAL: scorer.load_params(args.params_temporal)[0],
    }


def cmd_evaluate(args) -> None:
    out = _run_dir(args)
    dataset = validate_dataset(args.manifest)
    pairs = annotation.read_pairs(args.pairs)
    params = _load_both_params(args)
    cfg = _eval_config(args)
    ranking = evaluator.rank_videos(
        params[Modality.SPATIAL], params[Modality.TEMPORAL], dataset, dataset.videos, cfg
    )
    precision = evaluator.pairwise_precision(ranking, pairs.psi)
    graph = annotation.build_pair_graph(pairs.psi)
    buckets = evaluator.separation_accuracy(graph, ranking, pairs.psi)
    report = {
        "precision": precision,
        "per_separation": _bucket_report(buckets),
        "ranking": ranking.order,
        "scores": {v: ranking.scores[v] for v in ranking.order},
    }
    _dump_json(report, out / "reports" / "evaluation.json")
    _write_run_manifest(
        args, out, "evaluate", [args.manifest, args.pairs, args.params_spatial, args.params_temporal]
    )
    _print({"precision": precision, "report": str(out / "reports" / "evaluation.json")})


def cmd_cross_validate(args) -> None:
    out = _run_dir(args)
    dataset = validate_dataset(args.manifest)
    pairs = annotation.read_pairs(args.pairs)
    cfgs = {m: _train_config(args, m) for m in MODALITIES}
    arch = _arch_for(args, dataset.dim(Modality.SPATIAL))
    result = evaluator.cross_validate(
        dataset,
        pairs,
        cfgs,
        _eval_config(args),
        k=args.k,
        seed=derive_seed(args.seed, "folds"),
        arch=arch,
        with_curves=not args.no_curves,
        snippet_sigma_max=args.snippet_sigma_max,
        keep_train_results=True,
    )
    fold_docs = []
    for fold in result.folds:
        for modality in MODALITIES:
            trained = fold.train_results[modality.value]
            scorer.save_params(
                trained.params, out / "params" / f"fold{fold.fold_index}_{modality.value}.skp"
            )
            trainer.write_trace(
                trained.trace, out / "traces" / f"fold{fold.fold_index}_{modality.value}.jsonl"
            )
        doc = {
            "fold": fold.fold_index,
            "test_videos": fold.test_videos,
            "precision": fold.precision,
        }
        if fold.per_separation is not None:
            doc["per_separation"] = _bucket_report(fold.per_separation)
        if fold.alpha_curve is not None:
            doc["alpha_curve"] = fold.alpha_curve
            _write_curve_csv(
                out / "reports" / f"fold{fold.fold_index}_alpha.csv",
                ("alpha", "precision"),
                fold.alpha_curve,
            )
        if fold.snippet_curves is not None:
            doc["snippet_curves"] = fold.snippet_curves
            for mode, points in fold.snippet_curves.items():
                _write_curve_csv(
                    out / "reports" / f"fold{fold.fold_index}_snippets_{mode}.csv",
                    ("sigma", "precision"),
                    points,
                )
        fold_docs.append(doc)
    report = {"folds": fold_docs, "mean": result.mean_precision}
    _dump_json(report, out / "reports" / "report.json")
    _write_run_manifest(args, out, "cross-validate", [args.manifest, args.pairs])
    _print(
        {
            "mean_precision": result.mean_precision,
            "fold_precisions": [f.precision for f in result.folds],
            "report": str(out / "reports" / "report.json"),
        }
    )


def cmd_sweep_alpha(args) -> None:
    out = _run_dir(args)
    dataset = validate_dataset(args.manifest)
    pairs = annotation.read_pairs(args.pairs)
    params = _load_both_params(args)
    cfg = _eval_config(args)
    points = evaluator.alpha_sweep(
        params[Modality.SPATIAL],
        params[Modality.TEMPORAL],
        dataset,
        dataset.videos,
        pairs.psi,
        cfg,
    )
    _dump_json({"alpha_curve": points}, out / "reports" / "alpha_curve.json")
    _write_curve_csv(out / "reports" / "alpha_curve.csv", ("alpha", "precision"), points)
    _write_run_manifest(
        args, out, "sweep-alpha", [args.manifest, args.pairs, args.params_spatial, args.params_temporal]
    )
    _print({"alpha_curve": points})


def cmd_snippet_curve(args) -> None:
    out = _run_dir(args)
    dataset = validate_dataset(args.manifest)
    pairs = annotation.read_pairs(args.pairs)
    params = _load_both_params(args)
    cfg = _eval_config(args)
    modes = [SnippetMode(m) for m in args.modes.split(",")]
    curves = evaluator.snippet_curve(
        params[Modality.SPATIAL],
        params[Modality.TEMPORAL],
        dataset,
        dataset.videos,
        pairs.psi,
        cfg,
        modes=modes,
        sigma_max=args.sigma_max,
    )
    _dump_json({"snippet_curves": curves}, out / "reports" / "snippet_curves.json")
    for mode, points in curves.items():
        _write_curve_csv(
            out / "reports" / f"snippets_{mode}.csv", ("sigma", "precision"), points
        )
    _write_run_manifest(
        args, out, "snippet-curve", [args.manifest, args.pairs, args.params_spatial, args.params_temporal]
    )
    _print({"modes": list(curves), "sigma_max": args.sigma_max})


def cmd_baseline(args) -> None:
    out = _run_dir(args)
    dataset = validate_dataset(args.manifest)
    pairs = annotation.read_pairs(args.pairs)
    folds = annotation.make_folds(dataset.videos, args.k, derive_seed(args.seed, "folds"))
    features = {
        m: {v: baseline.video_feature(dataset.sequence(v, m)) for v in dataset.videos}
        for m in MODALITIES
    }
    fold_docs = []
    precisions = []
    for fold_index, test_fold in enumerate(folds):
        train_pairs, test_pairs = annotation.split_pairs_for_fold(pairs, test_fold)
        if not train_pairs.psi or not test_pairs.psi:
            raise SkillRankError(f"fold {fold_index}: empty train or test pair set")
        rankers = {}
        for modality in MODALITIES:
            rankers[modality] = baseline.ranksvm_train(
                features[modality],
                train_pairs.psi,
                C=args.C,
                seed=derive_seed(args.seed, "ranksvm", modality.value, fold_index),
                steps=args.steps,
            )
            ranker_params = scorer.ScorerParams(
                arch=scorer.Architecture(input_dim=len(rankers[modality].w)),
                weights=[rankers[modality].w[None, :].copy()],
                biases=[np.zeros(1)],
            )
            scorer.save_params(
                ranker_params,
                out / "params" / f"fold{fold_index}_{modality.value}.skp",
                model="ranksvm",
                extra={"C": args.C},
            )
        ranking = baseline.ranksvm_score(rankers, features, args.alpha, dataset.task_id)
        precision = evaluator.pairwise_precision(ranking, test_pairs.psi)
        precisions.append(precision)
        fold_docs.append(
            {"fold": fold_index, "test_videos": list(test_fold), "precision": precision}
        )
    report = {"folds": fold_docs, "mean": float(np.mean(precisions))}
    _dump_json(report, out / "reports" / "baseline.json")
    _write_run_manifest(args, out, "baseline", [args.manifest, args.pairs])
    _print({"mean_precision": report["mean"], "fold_precisions": precisions})


def cmd_serve(args) -> None:
    from .service import AnnotationService, QcPair, build_hits, create_app

    pair_lines = Path(args.pairs).read_text().splitlines()
    pairs = []
    for line in pair_lines:
        if line.strip():
            doc = json.loads(line)
            pairs.append((doc["i"], doc["j"]))
    qc_doc = json.loads(Path(args.qc).read_text())
    qc_pool = [QcPair(e["i"], e["j"], e["winner"]) for e in qc_doc]
    hits = build_hits(
        args.task, pairs, qc_pool, workers_per_pair=args.workers_per_pair, seed=args.seed
    )
    service = AnnotationService(
        task_id=args.task,
        hits=hits,
        qc_truth=AnnotationService.from_qc_pool(qc_pool),
        store_path=args.store,
        seed=args.seed,
    )
    app = create_app(service, media_dir=args.media_dir)
    print(
        json.dumps(
            {"task": args.task, "hits": len(hits), "store": str(args.store)},
            sort_keys=True,
        ),
        flush=True,
    )
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def cmd_correlate_time(args) -> None:
    dataset = validate_dataset(args.manifest)
    if not dataset.scores:
        raise SkillRankError("manifest carries no expert scores to correlate against")
    videos = [v for v in dataset.videos if v in dataset.scores]
    if args.times:
        times_doc = json.loads(Path(args.times).read_text())
        times = [float(times_doc[v]) for v in videos]
    else:
        modality = Modality(args.modality)
        times = [float(len(dataset.sequence(v, modality))) for v in videos]
    scores = [dataset.scores[v] for v in videos]
    rho = evaluator.spearman_rho(times, scores)
    _print({"videos": len(videos), "rho": rho, "source": args.times or "sequence length"})


# --- argument plumbing ----------------------------------------------------------


def _add_common_eval(p) -> None:
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--sigma", type=int, default=25)
    p.add_argument("--mode", default="uniform", choices=[m.value for m in SnippetMode])


def _add_train_flags(p) -> None:
    p.add_argument("--loss", default="rank3", choices=["rank1", "rank2", "rank3"])
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--splits", type=int, default=7)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--hidden", default=None, help="comma widths, or 'linear'")
    p.add_argument("--activation", default="relu")
    p.add_argument("--dropout", type=float, default=0.0, help="train-time hidden dropout")
    for modality in ("spatial", "temporal"):
        p.add_argument(f"--lr-schedule-{modality}", default=None, help="iter:lr,iter:lr,...")
        p.add_argument(f"--iterations-{modality}", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillrank", description="Rank task videos by displayed skill."
    )
    parser.add_argument("--config", default=None, help="JSON config; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="compute normalization stats into a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("consensus", help="judgments -> consistent/similar pairs")
    p.add_argument("--judgments", required=True)
    p.add_argument("--qc-truth", default=None)
    p.add_argument("--workers-per-pair", type=int, default=4)
    p.add_argument("--cycle-resolution", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("graph-check", help="verify the pair graph is acyclic")
    p.add_argument("--pairs", required=True)
    p.set_defaults(func=cmd_graph_check)

    p = sub.add_parser("folds", help="deterministic cross-validation folds")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_folds)

    p = sub.add_parser("train", help="train one stream's scorer")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--modality", required=True, choices=["spatial", "temporal"])
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="rank all videos and score precision")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--params-spatial", required=True)
    p.add_argument("--params-temporal", required=True)
    _add_common_eval(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cross-validate", help="k-fold pair-level cross-validation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--k", type=int, default=4)
    _add_train_flags(p)
    _add_common_eval(p)
    p.add_argument("--no-curves", action="store_true")
    p.add_argument("--snippet-sigma-max", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("sweep-alpha", help="precision across fusion weights")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--params-spatial", required=True)
    p.add_argument("--params-temporal", required=True)
    _add_common_eval(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("snippet-curve", help="precision vs test snippet count")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--params-spatial", required=True)
    p.add_argument("--params-temporal", required=True)
    _add_common_eval(p)
    p.add_argument("--modes", default="start,end,random")
    p.add_argument("--sigma-max", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_snippet_curve)

    p = sub.add_parser("baseline", help="RankSVM cross-validation baseline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("serve", help="serve annotation HITs over HTTP")
    p.add_argument("--task", required=True)
    p.add_argument("--pairs", required=True, help="JSON-lines of {i, j} to annotate")
    p.add_argument("--qc", required=True, help="JSON list of {i, j, winner}")
    p.add_argument("--workers-per-pair", type=int, default=4)
    p.add_argument("--store", required=True)
    p.add_argument("--media-dir", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("correlate-time", help="rank correlation of time vs score")
    p.add_argument("--manifest", required=True)
    p.add_argument("--times", default=None, help="JSON {video: seconds}; default row counts")
    p.add_argument("--modality", default="spatial", choices=["spatial", "temporal"])
    p.set_defaults(func=cmd_correlate_time)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # Config file values become defaults; explicit flags override them.
    probe, _ = parser.parse_known_args(argv)
    if probe.config:
        config = json.loads(Path(probe.config).read_text())
        known = {
            action.dest
            for action in parser._subparsers._group_actions[0].choices[probe.command]._actions
        }
        overrides = {k: v for k, v in config.items() if k in known}
        parser._subparsers._group_actions[0].choices[probe.command].set_defaults(**overrides)
    args = parser.parse_args(argv)
    try:
        args.func(args)
        return 0
    except SkillRankError as e:
        detail = {"error": type(e).__name__, "message": str(e)}
        if isinstance(e, CyclicGraphError):
            detail["cycles"] = e.cycles
        print(json.dumps(detail, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
