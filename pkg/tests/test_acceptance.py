"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

import itertools
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from oracles import (
    brute_force_components,
    brute_force_cycles,
    brute_force_precision,
    brute_force_ranks,
    random_digraph,
    reference_spearman,
)
from skillrank.annotation import (
    PairGraph,
    PairLabel,
    PairSets,
    find_cycles,
    longest_path_ranks,
    make_folds,
    separation,
    split_pairs_for_fold,
)
from skillrank.baseline import ranksvm_train
from skillrank.datastore import Modality
from skillrank.evaluator import (
    EvalConfig,
    SkillRanking,
    cross_validate,
    pairwise_precision,
    separation_accuracy,
    spearman_rho,
    stream_scores,
)
from skillrank.losses import loss_rank2, loss_rank3, loss_sim, rank_term
from skillrank.scorer import (
    Architecture,
    Gradients,
    backward,
    gradient_check,
    init_params,
    score_clip,
)
from skillrank.synthetic import make_clustered_task, make_latent_skill_task, write_pairs_file, write_task
from skillrank.trainer import LossVariant, TrainConfig, default_train_config, train_stream


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS")


# --- 1. gradient correctness -------------------------------------------------

KINK_CLEARANCE = 1e-3


def _loss_closure(variant, n_pairs, n_splits, dim, beta, m, rng):
    """Random pair/split snippet sets feeding the configured loss."""
    psi_data = [
        [(rng.normal(size=(3, dim)), rng.normal(size=(3, dim))) for _ in range(n_splits)]
        for _ in range(n_pairs)
    ]
    phi_data = (
        [
            [(rng.normal(size=(3, dim)), rng.normal(size=(3, dim))) for _ in range(n_splits)]
            for _ in range(n_pairs)
        ]
        if variant is LossVariant.RANK3
        else []
    )

    def closure(params):
        def clip_scores(data):
            return [
                ([score_clip(params, xi) for xi, _ in pair], [score_clip(params, xj) for _, xj in pair])
                for pair in data
            ]

        psi_scores = clip_scores(psi_data)
        phi_scores = clip_scores(phi_data)
        if variant is LossVariant.RANK3:
            total, psi_grads, phi_grads = loss_rank3(psi_scores, phi_scores, beta, m)
        else:
            total, psi_grads = loss_rank2(psi_scores, m)
            phi_grads = []
        grads = None
        for data, grad_list in ((psi_data, psi_grads), (phi_data, phi_grads)):
            for pair, (dsi, dsj) in zip(data, grad_list):
                for k, (xi, xj) in enumerate(pair):
                    for x, upstream in ((xi, dsi[k]), (xj, dsj[k])):
                        g = backward(params, x, float(upstream))
                        grads = g if grads is None else grads.add(g)
        if grads is None:
            grads = Gradients.zeros_like(params)
        return total, grads

    def kink_distance(params):
        distances = []
        for si_list, sj_list in (
            [
                ([score_clip(params, xi) for xi, _ in pair], [score_clip(params, xj) for _, xj in pair])
                for pair in psi_data
            ]
        ):
            for si, sj in zip(si_list, sj_list):
                distances.append(abs(m - si + sj))
        for pair in phi_data:
            for xi, xj in pair:
                gap = score_clip(params, xi) - score_clip(params, xj)
                distances.append(abs(abs(gap) - m))
        return min(distances)

    return closure, kink_distance


def test_gradient_correctness():
    with criterion("gradient-correctness"):
        start = time.monotonic()
        rng = np.random.default_rng(2024)
        archs = {
            "linear": Architecture(input_dim=6),
            "mlp": Architecture(input_dim=8, hidden=(4,), activation="tanh"),
        }
        checked = 0
        target = 100
        combos = list(itertools.product(archs.items(), list(LossVariant)))
        while checked < target:
            for (name, arch), variant in combos:
                if checked >= target:
                    break
                n_splits = 1 if variant is LossVariant.RANK1 else 3
                closure, kink_distance = _loss_closure(
                    variant, n_pairs=2, n_splits=n_splits, dim=arch.input_dim,
                    beta=0.5, m=0.5, rng=rng,
                )
                params = init_params(arch, seed=int(rng.integers(1 << 30)))
                for layer in range(len(params.weights)):
                    params.weights[layer] += rng.normal(0, 0.3, params.weights[layer].shape)
                    params.biases[layer] += rng.normal(0, 0.1, params.biases[layer].shape)
                if kink_distance(params) < KINK_CLEARANCE:
                    continue  # redraw: too close to a hinge kink
                error = gradient_check(params, closure, step=1e-5)
                assert error < 1e-4, f"{name}/{variant.value}: rel error {error}"
                checked += 1
        elapsed = time.monotonic() - start
        assert elapsed < 10.0, f"gradient checks took {elapsed:.1f}s"


# --- 2. loss identities ---------------------------------------------------------

def test_loss_identities():
    with criterion("loss-identities"):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n_pairs = int(rng.integers(1, 5))
            n_splits = int(rng.integers(1, 8))
            psi = [
                (rng.normal(size=n_splits).tolist(), rng.normal(size=n_splits).tolist())
                for _ in range(n_pairs)
            ]
            phi = [
                (rng.normal(size=n_splits).tolist(), rng.normal(size=n_splits).tolist())
                for _ in range(n_pairs)
            ]
            m = float(rng.uniform(0.2, 2.0))
            # L_rank3(beta=1) == L_rank2, exactly.
            assert loss_rank3(psi, phi, 1.0, m)[0] == loss_rank2(psi, m)[0]
            # L_rank3(beta=0) == L_sim, exactly.
            assert loss_rank3(psi, phi, 0.0, m)[0] == loss_sim(phi, m)[0]
            # L_rank2 at N=1 == plain rank loss, exactly.
            single = [([si[0]], [sj[0]]) for si, sj in psi]
            plain = sum(rank_term(si[0], sj[0], m)[0] for si, sj in psi)
            assert loss_rank2(single, m)[0] == plain
            # L_sim vanishes whenever every |gap| <= m.
            bounded = [
                ((base := rng.normal(size=n_splits)).tolist(),
                 (base + rng.uniform(-m, m, size=n_splits)).tolist())
                for _ in range(n_pairs)
            ]
            assert loss_sim(bounded, m)[0] == 0.0


# --- 3. synthetic end-to-end -------------------------------------------------------

def test_synthetic_end_to_end():
    with criterion("synthetic-end-to-end"):
        start = time.monotonic()
        task = make_latent_skill_task(n_videos=40, dim=12, snr=5.0, seed=0)
        cfgs = {
            m: default_train_config(
                m, variant=LossVariant.RANK3, splits=7, beta=0.5, margin=1.0, seed=0
            )
            for m in (Modality.SPATIAL, Modality.TEMPORAL)
        }
        result = cross_validate(
            task.dataset,
            task.pairs,
            cfgs,
            EvalConfig(alpha=0.4, sigma=25),
            k=4,
            seed=0,
        )
        elapsed = time.monotonic() - start
        assert elapsed < 60.0, f"cross-validation took {elapsed:.1f}s"
        assert result.mean_precision >= 0.90, f"mean precision {result.mean_precision:.4f}"


# --- 4. similarity-loss effect --------------------------------------------------------

def test_similarity_loss_effect():
    with criterion("similarity-loss-effect"):
        variants = (LossVariant.RANK1, LossVariant.RANK2, LossVariant.RANK3)
        gaps = {v: [] for v in variants}
        precisions = {v: [] for v in variants}
        for seed in range(10):
            task = make_clustered_task(seed=seed)
            folds = make_folds(task.dataset.videos, 4, seed)
            train_pairs, test_pairs = split_pairs_for_fold(task.pairs, folds[0])
            for variant in variants:
                cfg = TrainConfig(
                    variant=variant,
                    splits=7,
                    beta=0.5,
                    batch_size=64,
                    lr_schedule=((0, 5e-3), (400, 5e-4)),
                    max_iterations=600,
                    seed=seed,
                )
                trained = train_stream(
                    task.dataset, Modality.SPATIAL, train_pairs.psi, train_pairs.phi, cfg
                )
                scores = stream_scores(
                    trained.params,
                    task.dataset,
                    Modality.SPATIAL,
                    task.dataset.videos,
                    EvalConfig(sigma=25),
                )
                gaps[variant].append(
                    float(np.mean([abs(scores[p.i] - scores[p.j]) for p in task.pairs.phi]))
                )
                precisions[variant].append(
                    pairwise_precision(SkillRanking("t", scores), test_pairs.psi)
                )
        mean_gap = {v: float(np.mean(gaps[v])) for v in variants}
        mean_precision = {v: float(np.mean(precisions[v])) for v in variants}
        assert mean_gap[LossVariant.RANK3] < mean_gap[LossVariant.RANK2], mean_gap
        assert mean_precision[LossVariant.RANK3] >= mean_precision[LossVariant.RANK1], mean_precision


# --- 5. graph oracle equivalence ---------------------------------------------------------

def test_graph_oracle_equivalence():
    with criterion("graph-oracle-equivalence"):
        rng = np.random.default_rng(99)
        acyclic_seen = 0
        for _ in range(200):
            nodes, edges = random_digraph(rng, max_nodes=8, p=float(rng.uniform(0.1, 0.5)))
            graph = PairGraph(nodes=nodes, edges=edges)
            cycles = {tuple(c) for c in find_cycles(graph)}
            assert cycles == brute_force_cycles(nodes, edges)
            if cycles:
                continue
            acyclic_seen += 1
            ranks = brute_force_ranks(nodes, edges)
            assert longest_path_ranks(graph) == ranks
            components = brute_force_components(nodes, edges)
            for i, j in itertools.combinations(nodes, 2):
                expected = (
                    abs(ranks[i] - ranks[j]) if components[i] == components[j] else None
                )
                assert separation(graph, i, j) == expected
        assert acyclic_seen >= 20  # the sweep genuinely exercises separation


# --- 6. metric oracles ----------------------------------------------------------------------

def test_metric_oracles():
    with criterion("metric-oracles"):
        rng = np.random.default_rng(5)
        # pairwise_precision against brute-force pair enumeration, exactly.
        for _ in range(100):
            videos = [f"v{k}" for k in range(int(rng.integers(3, 10)))]
            scores = {v: float(rng.integers(0, 6)) for v in videos}
            pairs = [
                (a, b)
                for a, b in itertools.combinations(videos, 2)
                if rng.random() < 0.7
            ]
            if not pairs:
                continue
            ranking = SkillRanking("t", scores)
            truth = [PairLabel(a, b, 1) for a, b in pairs]
            assert pairwise_precision(ranking, truth) == brute_force_precision(scores, pairs)

        # Separation-bucket weighted mean equals overall precision, exactly.
        for _ in range(50):
            n = int(rng.integers(3, 8))
            videos = [f"v{k}" for k in range(n)]
            edges = {
                (videos[a], videos[b])
                for a in range(n)
                for b in range(a + 1, n)
                if rng.random() < 0.6
            } | {(videos[k], videos[k + 1]) for k in range(n - 1)}
            graph = PairGraph(nodes=videos, edges=edges)
            truth = [PairLabel(a, b, 1) for a, b in edges]
            scores = {v: float(rng.normal()) for v in videos}
            ranking = SkillRanking("t", scores)
            buckets = separation_accuracy(graph, ranking, truth)
            weighted = Fraction(
                sum(b.correct for b in buckets.values()),
                sum(b.total for b in buckets.values()),
            )
            overall = Fraction(
                sum(1 for p in truth if scores[p.i] > scores[p.j]), len(truth)
            )
            assert weighted == overall

        # spearman_rho against a rank-then-Pearson reference, within 1e-12.
        checked = 0
        while checked < 100:
            n = int(rng.integers(3, 40))
            x = rng.integers(0, 8, size=n).astype(float)
            y = rng.normal(size=n)
            if len(set(x)) < 2:
                continue
            assert spearman_rho(x, y) == pytest.approx(reference_spearman(x, y), abs=1e-12)
            checked += 1


# --- 7. permutation null ----------------------------------------------------------------------

def test_permutation_null():
    with criterion("permutation-null"):
        means = []
        for seed in range(10):
            task = make_latent_skill_task(
                n_videos=16, dim=6, snr=5.0, seed=100 + seed, n_tie_pairs=0
            )
            rng = np.random.default_rng(seed)
            shuffled = PairSets(
                psi=[
                    PairLabel(p.j, p.i, 1) if rng.random() < 0.5 else p
                    for p in task.pairs.psi
                ]
            )
            cfg = TrainConfig(
                variant=LossVariant.RANK1,
                splits=1,
                batch_size=32,
                lr_schedule=((0, 1e-2),),
                max_iterations=120,
                seed=seed,
            )
            result = cross_validate(
                task.dataset, shuffled, cfg, EvalConfig(alpha=0.4, sigma=25), k=4, seed=seed
            )
            means.append(result.mean_precision)
        overall = float(np.mean(means))
        assert 0.4 <= overall <= 0.6, f"null precision {overall:.3f}"


# --- 8. determinism of the CLI -------------------------------------------------------------------

def _prepare_cli_fixture(root: Path) -> None:
    task = make_latent_skill_task(
        n_videos=12, dim=5, snr=20.0, seed=8, n_tie_pairs=4, length_range=(30, 40)
    )
    write_task(task, root / "data")
    write_pairs_file(task.pairs, root / "data" / "pairs.jsonl")


def _run_cli(cwd: Path, *argv: str) -> None:
    result = subprocess.run(
        [sys.executable, "-m", "skillrank.cli", *argv],
        cwd=cwd,
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_cli_determinism(tmp_path):
    with criterion("cli-determinism"):
        sides = []
        for side in ("a", "b"):
            base = tmp_path / side
            base.mkdir()
            _prepare_cli_fixture(base)
            _run_cli(
                base,
                "ingest", "--manifest", "data/manifest.json", "--out", "data/manifest_norm.json",
            )
            _run_cli(
                base,
                "cross-validate",
                "--manifest", "data/manifest_norm.json",
                "--pairs", "data/pairs.jsonl",
                "--loss", "rank3", "--beta", "0.5", "--splits", "7",
                "--alpha", "0.4", "--sigma", "25",
                "--iterations-spatial", "60", "--iterations-temporal", "60",
                "--snippet-sigma-max", "5",
                "--seed", "12345",
                "--out-dir", "run",
            )
            _run_cli(
                base,
                "train",
                "--manifest", "data/manifest_norm.json",
                "--pairs", "data/pairs.jsonl",
                "--modality", "temporal",
                "--loss", "rank2", "--splits", "7",
                "--iterations-temporal", "50",
                "--seed", "12345",
                "--out-dir", "run_train",
            )
            sides.append(
                {
                    **{f"run/{k}": v for k, v in _tree_bytes(base / "run").items()},
                    **{f"run_train/{k}": v for k, v in _tree_bytes(base / "run_train").items()},
                }
            )
        assert sides[0].keys() == sides[1].keys()
        for name in sides[0]:
            assert sides[0][name] == sides[1][name], f"{name} differs between reruns"


# --- 9. baseline separability ----------------------------------------------------------------------

def test_baseline_separability():
    with criterion("baseline-separability"):
        start = time.monotonic()
        rng = np.random.default_rng(3)
        videos = [f"v{k}" for k in range(12)]
        direction = rng.normal(size=6)
        features = {
            v: float(k) * direction + rng.normal(0, 0.01, size=6)
            for k, v in enumerate(videos)
        }
        psi = [
            PairLabel(videos[b], videos[a], 1)
            for a, b in itertools.combinations(range(12), 2)
        ]
        ranker = ranksvm_train(features, psi, C=1.0, seed=0)
        scores = {v: ranker.score(x) for v, x in features.items()}
        precision = brute_force_precision(scores, [(p.i, p.j) for p in psi])
        elapsed = time.monotonic() - start
        assert precision == 1.0, f"training precision {precision}"
        assert elapsed < 5.0, f"RankSVM took {elapsed:.1f}s"
