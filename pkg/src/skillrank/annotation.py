"""From raw multi-worker judgments to the consistent pair set and similar pair set.

The pipeline: filter workers who fail the quality-control pair, require
unanimous agreement per pair, build the winner->loser graph, surface cycles
for manual resolution, and keep inconsistent pairs whose longest-walk
separation is 0 or 1 as the similar set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import AnnotationProtocolError, CyclicGraphError, QcConfigError, SkillRankError

PairKey = tuple[str, str]  # lexicographically sorted unordered pair


def pair_key(i: str, j: str) -> PairKey:
    return (i, j) if i <= j else (j, i)


class Choice(str, Enum):
    I_BETTER = "i_better"
    J_BETTER = "j_better"


@dataclass(frozen=True)
class Judgment:
    """One strict preference by one worker on one video pair."""

    hit_id: str
    worker_id: str
    i: str
    j: str
    choice: Choice
    is_quality_control: bool = False
    timestamp: str = ""

    @property
    def winner(self) -> str:
        return self.i if self.choice is Choice.I_BETTER else self.j

    def to_json(self) -> str:
        return json.dumps(
            {
                "hit_id": self.hit_id,
                "worker_id": self.worker_id,
                "i": self.i,
                "j": self.j,
                "choice": self.choice.value,
                "is_quality_control": self.is_quality_control,
                "timestamp": self.timestamp,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(line: str) -> "Judgment":
        doc = json.loads(line)
        return Judgment(
            hit_id=doc["hit_id"],
            worker_id=doc["worker_id"],
            i=doc["i"],
            j=doc["j"],
            choice=Choice(doc["choice"]),
            is_quality_control=bool(doc.get("is_quality_control", False)),
            timestamp=doc.get("timestamp", ""),
        )


@dataclass(frozen=True)
class PairLabel:
    """An ordered video pair with label 1 (i more skilled) or 0 (no preference).

    Each unordered pair is stored once: a -1 label is normalized by swapping,
    and label-0 pairs are stored lexicographically. The reverse label is
    defined as the negation.
    """

    i: str
    j: str
    label: int

    def __post_init__(self):
        if self.i == self.j:
            raise SkillRankError(f"pair with identical videos {self.i!r}")
        if self.label not in (-1, 0, 1):
            raise SkillRankError(f"label must be in {{-1, 0, 1}}, got {self.label}")

    @staticmethod
    def make(i: str, j: str, label: int) -> "PairLabel":
        """Canonical form: winner first for ordered pairs, sorted for ties."""
        if label == -1:
            return PairLabel(j, i, 1)
        if label == 0 and j < i:
            return PairLabel(j, i, 0)
        return PairLabel(i, j, label)

    @property
    def key(self) -> PairKey:
        return pair_key(self.i, self.j)


@dataclass
class PairSets:
    """The consistent ordered pairs (psi, label 1) and similar pairs (phi, label 0)."""

    psi: list[PairLabel] = field(default_factory=list)
    phi: list[PairLabel] = field(default_factory=list)

    def __post_init__(self):
        seen: set[PairKey] = set()
        for pair in self.psi:
            if pair.label != 1:
                raise SkillRankError(f"psi pair {pair} must have label 1")
            if pair.key in seen:
                raise SkillRankError(f"pair {pair.key} appears twice")
            seen.add(pair.key)
        for pair in self.phi:
            if pair.label != 0:
                raise SkillRankError(f"phi pair {pair} must have label 0")
            if pair.key in seen:
                raise SkillRankError(f"pair {pair.key} appears twice")
            seen.add(pair.key)

    def videos(self) -> set[str]:
        out: set[str] = set()
        for pair in [*self.psi, *self.phi]:
            out.add(pair.i)
            out.add(pair.j)
        return out

    def __len__(self) -> int:
        return len(self.psi) + len(self.phi)


def write_pairs(pairs: PairSets, path) -> None:
    with open(path, "w") as fh:
        for pair in [*pairs.psi, *pairs.phi]:
            fh.write(json.dumps({"i": pair.i, "j": pair.j, "label": pair.label}) + "\n")


def read_pairs(path) -> PairSets:
    psi, phi = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            pair = PairLabel.make(doc["i"], doc["j"], int(doc["label"]))
            (psi if pair.label == 1 else phi).append(pair)
    return PairSets(psi=psi, phi=phi)


class PairGraph:
    """Directed graph over videos, one winner->loser edge per consistent pair."""

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[tuple[str, str]] = ()):
        self.nodes: set[str] = set(nodes)
        self.edges: set[tuple[str, str]] = set()
        for winner, loser in edges:
            self.add_edge(winner, loser)

    def add_edge(self, winner: str, loser: str) -> None:
        self.nodes.add(winner)
        self.nodes.add(loser)
        self.edges.add((winner, loser))

    def successors(self, node: str) -> list[str]:
        return sorted(v for u, v in self.edges if u == node)

    def predecessors(self, node: str) -> list[str]:
        return sorted(u for u, v in self.edges if v == node)

    def in_degree(self, node: str) -> int:
        return sum(1 for _, v in self.edges if v == node)

    def topological_order(self) -> list[str] | None:
        """Kahn's algorithm; None when the graph has a cycle."""
        indeg = {v: 0 for v in self.nodes}
        for _, v in self.edges:
            indeg[v] += 1
        ready = sorted(v for v, d in indeg.items() if d == 0)
        order: list[str] = []
        succ: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            succ[u].append(v)
        while ready:
            node = ready.pop()
            order.append(node)
            for nxt in sorted(succ[node], reverse=True):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
            ready.sort(reverse=True)
        return order if len(order) == len(self.nodes) else None

    def is_acyclic(self) -> bool:
        return self.topological_order() is not None


def build_pair_graph(psi: Sequence[PairLabel]) -> PairGraph:
    """One winner->loser edge per consistent pair."""
    graph = PairGraph()
    for pair in psi:
        if pair.label != 1:
            raise SkillRankError(f"pair graph takes label-1 pairs, got {pair}")
        graph.add_edge(pair.i, pair.j)
    return graph


@dataclass(frozen=True)
class ConsensusOutcome:
    consistent: bool
    winner: str | None  # set iff consistent
    loser: str | None


def qc_filter(
    judgments: Sequence[Judgment], qc_truth: dict[PairKey, str]
) -> list[Judgment]:
    """Drop every judgment from workers who missed any quality-control pair.

    `qc_truth` maps the sorted pair key to the truly-better video id and must
    cover every judgment flagged is_quality_control.
    """
    failed: set[str] = set()
    for judgment in judgments:
        if not judgment.is_quality_control:
            continue
        key = pair_key(judgment.i, judgment.j)
        if key not in qc_truth:
            raise QcConfigError(f"quality-control pair {key} has no ground truth")
        if judgment.winner != qc_truth[key]:
            failed.add(judgment.worker_id)
    return [j for j in judgments if j.worker_id not in failed]


def consensus(
    judgments: Sequence[Judgment], workers_per_pair: int = 4
) -> dict[PairKey, ConsensusOutcome]:
    """Unanimity consensus per pair; quality-control judgments are ignored.

    A pair is consistent iff all of its judgments choose the same video.
    Every non-QC pair must carry exactly `workers_per_pair` judgments.
    """
    by_pair: dict[PairKey, list[Judgment]] = {}
    for judgment in judgments:
        if judgment.is_quality_control:
            continue
        by_pair.setdefault(pair_key(judgment.i, judgment.j), []).append(judgment)

    bad = sorted(k for k, js in by_pair.items() if len(js) != workers_per_pair)
    if bad:
        counts = {k: len(by_pair[k]) for k in bad}
        raise AnnotationProtocolError(
            f"pairs with judgment count != {workers_per_pair}: {counts}"
        )

    outcomes: dict[PairKey, ConsensusOutcome] = {}
    for key, group in by_pair.items():
        winners = {j.winner for j in group}
        if len(winners) == 1:
            winner = winners.pop()
            loser = key[0] if winner == key[1] else key[1]
            outcomes[key] = ConsensusOutcome(consistent=True, winner=winner, loser=loser)
        else:
            outcomes[key] = ConsensusOutcome(consistent=False, winner=None, loser=None)
    return outcomes


def consistent_pairs(outcomes: dict[PairKey, ConsensusOutcome]) -> list[PairLabel]:
    return [
        PairLabel(o.winner, o.loser, 1)
        for _, o in sorted(outcomes.items())
        if o.consistent
    ]


def inconsistent_pairs(outcomes: dict[PairKey, ConsensusOutcome]) -> list[PairKey]:
    return sorted(k for k, o in outcomes.items() if not o.consistent)


def find_cycles(graph: PairGraph) -> list[list[str]]:
    """Every elementary cycle, as node sequences starting at their smallest node.

    Johnson-style search anchored at each node in sorted order, restricted to
    nodes not smaller than the anchor, so each cycle is reported exactly once.
    Empty iff the graph is a DAG.
    """
    nodes = sorted(graph.nodes)
    position = {v: idx for idx, v in enumerate(nodes)}
    adjacency = {v: graph.successors(v) for v in nodes}

    cycles: list[list[str]] = []
    for anchor_idx, anchor in enumerate(nodes):
        blocked: set[str] = set()
        block_map: dict[str, set[str]] = {v: set() for v in nodes}
        stack: list[str] = []

        def unblock(v: str) -> None:
            blocked.discard(v)
            for w in list(block_map[v]):
                block_map[v].discard(w)
                if w in blocked:
                    unblock(w)

        def circuit(v: str) -> bool:
            found = False
            stack.append(v)
            blocked.add(v)
            for w in adjacency[v]:
                if position[w] < anchor_idx:
                    continue
                if w == anchor:
                    cycles.append(list(stack))
                    found = True
                elif w not in blocked:
                    if circuit(w):
                        found = True
            if found:
                unblock(v)
            else:
                for w in adjacency[v]:
                    if position[w] >= anchor_idx:
                        block_map[w].add(v)
            stack.pop()
            return found

        circuit(anchor)
    return cycles


def longest_path_ranks(graph: PairGraph) -> dict[str, int]:
    """rank(v) = length of the longest walk from any in-degree-0 node to v."""
    order = graph.topological_order()
    if order is None:
        raise CyclicGraphError("graph has cycles", cycles=find_cycles(graph))
    rank: dict[str, int] = {}
    for node in order:
        preds = graph.predecessors(node)
        rank[node] = 0 if not preds else max(rank[p] + 1 for p in preds)
    return rank


def _weak_components(graph: PairGraph) -> dict[str, int]:
    neighbor: dict[str, set[str]] = {v: set() for v in graph.nodes}
    for u, v in graph.edges:
        neighbor[u].add(v)
        neighbor[v].add(u)
    component: dict[str, int] = {}
    comp = 0
    for start in sorted(graph.nodes):
        if start in component:
            continue
        frontier = [start]
        while frontier:
            node = frontier.pop()
            if node in component:
                continue
            component[node] = comp
            frontier.extend(neighbor[node] - component.keys())
        comp += 1
    return component


def separation(graph: PairGraph, i: str, j: str) -> int | None:
    """|rank(i) - rank(j)| under longest-walk ranks, or None when undefined.

    Undefined when either video is absent from the graph or the two sit in
    weakly disconnected components (no chain makes their ranks comparable).
    """
    if i not in graph.nodes or j not in graph.nodes:
        return None
    if i == j:
        return 0
    ranks = longest_path_ranks(graph)
    components = _weak_components(graph)
    if components[i] != components[j]:
        return None
    return abs(ranks[i] - ranks[j])


def similar_pairs(
    graph: PairGraph, inconsistent: Iterable[PairKey]
) -> list[PairLabel]:
    """Inconsistent pairs with defined separation <= 1, labeled 0."""
    if not graph.is_acyclic():
        raise CyclicGraphError(
            "similar-pair mining needs an acyclic graph", cycles=find_cycles(graph)
        )
    out = []
    for key in sorted(set(inconsistent)):
        sep = separation(graph, key[0], key[1])
        if sep is not None and sep <= 1:
            out.append(PairLabel.make(key[0], key[1], 0))
    return out


def pairs_from_scores(scores: dict[str, float]) -> PairSets:
    """All pairs ordered by strictly different expert scores; ties become phi."""
    videos = sorted(scores)
    psi, phi = [], []
    for a_idx, a in enumerate(videos):
        for b in videos[a_idx + 1 :]:
            if scores[a] > scores[b]:
                psi.append(PairLabel(a, b, 1))
            elif scores[b] > scores[a]:
                psi.append(PairLabel(b, a, 1))
            else:
                phi.append(PairLabel.make(a, b, 0))
    return PairSets(psi=psi, phi=phi)


def make_folds(videos: Iterable[str], k: int, seed: int) -> list[list[str]]:
    """Partition videos into k folds with sizes differing by at most 1."""
    videos = sorted(videos)
    if k < 2:
        raise SkillRankError(f"fold count must be >= 2, got {k}")
    if len(videos) < k:
        raise SkillRankError(f"{len(videos)} videos cannot make {k} folds")
    rng = np.random.default_rng(seed)
    order = [videos[idx] for idx in rng.permutation(len(videos))]
    base, extra = divmod(len(order), k)
    folds = []
    cursor = 0
    for fold_idx in range(k):
        size = base + (1 if fold_idx < extra else 0)
        folds.append(sorted(order[cursor : cursor + size]))
        cursor += size
    return folds


def split_pairs_for_fold(
    pairs: PairSets, test_fold: Iterable[str]
) -> tuple[PairSets, PairSets]:
    """Train pairs have both endpoints outside the test fold; the rest test."""
    held_out = set(test_fold)

    def split(items: list[PairLabel]) -> tuple[list[PairLabel], list[PairLabel]]:
        train = [p for p in items if p.i not in held_out and p.j not in held_out]
        test = [p for p in items if p.i in held_out or p.j in held_out]
        return train, test

    train_psi, test_psi = split(pairs.psi)
    train_phi, test_phi = split(pairs.phi)
    return (
        PairSets(psi=train_psi, phi=train_phi),
        PairSets(psi=test_psi, phi=test_phi),
    )
