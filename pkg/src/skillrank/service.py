"""HTTP service that deals annotation HITs (4 task pairs + 1 hidden
quality-control pair) and durably records worker judgments.

Persistence is a single append-only JSON-lines file; the in-memory index is
rebuilt from it at startup. HIT assignment is atomic and a worker never
receives the same pair twice, which also guarantees that a pair's judgments
come from distinct workers.
"""

import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .annotation import Choice, Judgment, PairKey, pair_key
from .errors import ServiceError
from .seeding import derive_seed


class HitProtocolError(ServiceError):
    def __init__(self, message: str, code: str, status: int):
        super().__init__(message)
        self.code = code
        self.status = status


@dataclass(frozen=True)
class HitPair:
    i: str
    j: str
    is_quality_control: bool = False

    @property
    def key(self) -> PairKey:
        return pair_key(self.i, self.j)


@dataclass
class Hit:
    hit_id: str
    task_id: str
    pairs: list[HitPair]  # exactly 5, exactly 1 quality-control
    assigned_worker: str | None = None

    def validate(self) -> None:
        if len(self.pairs) != 5:
            raise ServiceError(f"HIT {self.hit_id} must hold 5 pairs, has {len(self.pairs)}")
        if sum(p.is_quality_control for p in self.pairs) != 1:
            raise ServiceError(f"HIT {self.hit_id} must hold exactly 1 quality-control pair")

    def public_payload(self, shuffle_seed: int) -> dict:
        # The QC flag stays server-side: workers must not detect the control.
        return {
            "hit_id": self.hit_id,
            "task_id": self.task_id,
            "pairs": [{"i": p.i, "j": p.j} for p in self.pairs],
            "shuffle_seed": shuffle_seed,
        }


@dataclass(frozen=True)
class QcPair:
    i: str
    j: str
    winner: str

    def __post_init__(self):
        if self.winner not in (self.i, self.j):
            raise ServiceError(f"QC winner {self.winner!r} is not in the pair")


TASK_PAIRS_PER_HIT = 4


def build_hits(
    task_id: str,
    pairs: list[tuple[str, str]],
    qc_pool: list[QcPair],
    workers_per_pair: int = 4,
    seed: int = 0,
) -> list[Hit]:
    """Assemble HITs so every task pair appears in exactly workers_per_pair HITs.

    Greedy max-remaining construction with seeded tie-breaking; the QC pair
    and its position inside the HIT are seeded draws as well.
    """
    unique = {pair_key(i, j) for i, j in pairs}
    if len(unique) != len(pairs):
        raise ServiceError("duplicate task pairs in the annotation request")
    if len(pairs) < TASK_PAIRS_PER_HIT:
        raise ServiceError(
            f"need at least {TASK_PAIRS_PER_HIT} task pairs to fill a HIT, got {len(pairs)}"
        )
    if not qc_pool:
        raise ServiceError("quality-control pool is empty")
    total = len(pairs) * workers_per_pair
    if total % TASK_PAIRS_PER_HIT != 0:
        raise ServiceError(
            f"{len(pairs)} pairs x {workers_per_pair} workers is not divisible by "
            f"{TASK_PAIRS_PER_HIT} pairs per HIT"
        )

    rng = np.random.default_rng(derive_seed(seed, "hits", task_id))
    priority = {p: rank for rank, p in enumerate(rng.permutation(len(pairs)))}
    remaining = {idx: workers_per_pair for idx in range(len(pairs))}

    hits: list[Hit] = []
    while any(remaining.values()):
        order = sorted(remaining, key=lambda idx: (-remaining[idx], priority[idx]))
        picked = [idx for idx in order if remaining[idx] > 0][:TASK_PAIRS_PER_HIT]
        if len(picked) < TASK_PAIRS_PER_HIT:
            raise ServiceError("cannot fill a HIT with distinct pairs")  # unreachable by construction
        for idx in picked:
            remaining[idx] -= 1
        qc = qc_pool[int(rng.integers(len(qc_pool)))]
        hit_pairs = [HitPair(*pairs[idx]) for idx in picked]
        qc_position = int(rng.integers(len(hit_pairs) + 1))
        hit_pairs.insert(qc_position, HitPair(qc.i, qc.j, is_quality_control=True))
        hit = Hit(hit_id=f"hit-{len(hits):04d}", task_id=task_id, pairs=hit_pairs)
        hit.validate()
        hits.append(hit)
    return hits


class AnnotationService:
    """In-memory HIT dealer over an append-only judgment store."""

    def __init__(
        self,
        task_id: str,
        hits: list[Hit],
        qc_truth: dict[PairKey, str],
        store_path: str | Path,
        seed: int = 0,
    ):
        self.task_id = task_id
        self.hits = hits
        self.by_id = {h.hit_id: h for h in hits}
        self.qc_truth = dict(qc_truth)
        self.store_path = Path(store_path)
        self.seed = seed
        self._lock = threading.Lock()
        self.submitted: set[str] = set()
        self.worker_pairs: dict[str, set[PairKey]] = {}
        self._replay()

    @staticmethod
    def from_qc_pool(qc_pool: Iterable[QcPair]) -> dict[PairKey, str]:
        return {pair_key(q.i, q.j): q.winner for q in qc_pool}

    def _replay(self) -> None:
        if not self.store_path.exists():
            return
        with open(self.store_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                judgment = Judgment.from_json(line)
                hit = self.by_id.get(judgment.hit_id)
                if hit is None:
                    continue
                hit.assigned_worker = judgment.worker_id
                self.submitted.add(judgment.hit_id)
                self.worker_pairs.setdefault(judgment.worker_id, set()).add(
                    pair_key(judgment.i, judgment.j)
                )

    def get_hit(self, worker_id: str) -> Hit | None:
        """Assign (or re-serve) the next HIT for this worker.

        Idempotent: an in-flight assignment is always re-served before any
        new HIT is considered. New assignments skip HITs sharing any pair
        with the worker's previous HITs.
        """
        with self._lock:
            for hit in self.hits:
                if hit.assigned_worker == worker_id and hit.hit_id not in self.submitted:
                    return hit
            seen = self.worker_pairs.get(worker_id, set())
            for hit in self.hits:
                if hit.hit_id in self.submitted or hit.assigned_worker is not None:
                    continue
                if any(p.key in seen for p in hit.pairs):
                    continue
                hit.assigned_worker = worker_id
                return hit
            return None

    def submit_judgments(self, hit_id: str, worker_id: str, choices: list[str]) -> int:
        """Durably append this worker's 5 strict choices; returns the count."""
        with self._lock:
            hit = self.by_id.get(hit_id)
            if hit is None:
                raise HitProtocolError(f"unknown HIT {hit_id!r}", "unknown_hit", 404)
            if hit.assigned_worker != worker_id:
                raise HitProtocolError(
                    f"HIT {hit_id} is not assigned to worker {worker_id!r}",
                    "wrong_worker",
                    403,
                )
            if hit_id in self.submitted:
                raise HitProtocolError(
                    f"HIT {hit_id} was already submitted", "duplicate_submission", 409
                )
            if len(choices) != len(hit.pairs):
                raise HitProtocolError(
                    f"expected {len(hit.pairs)} choices, got {len(choices)}",
                    "wrong_choice_count",
                    422,
                )
            try:
                parsed = [Choice(c) for c in choices]
            except ValueError as e:
                raise HitProtocolError(str(e), "invalid_choice", 422)

            now = datetime.now(timezone.utc).isoformat()
            lines = [
                Judgment(
                    hit_id=hit_id,
                    worker_id=worker_id,
                    i=pair.i,
                    j=pair.j,
                    choice=choice,
                    is_quality_control=pair.is_quality_control,
                    timestamp=now,
                ).to_json()
                for pair, choice in zip(hit.pairs, parsed)
            ]
            with open(self.store_path, "a") as fh:
                fh.write("\n".join(lines) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.submitted.add(hit_id)
            self.worker_pairs.setdefault(worker_id, set()).update(
                p.key for p in hit.pairs
            )
            return len(lines)

    def export_lines(self) -> list[str]:
        if not self.store_path.exists():
            return []
        with open(self.store_path) as fh:
            return [line.rstrip("\n") for line in fh if line.strip()]

    def shuffle_seed_for(self, hit_id: str, worker_id: str) -> int:
        # Controls the client-side presentation order, reproducibly.
        return derive_seed(self.seed, "shuffle", hit_id, worker_id) % 2**31


def create_app(service: AnnotationService, media_dir: str | Path | None = None):
    """FastAPI wiring over one AnnotationService."""
    from fastapi import FastAPI, HTTPException, Query
    from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
    from pydantic import BaseModel

    class SubmitBody(BaseModel):
        worker: str
        choices: list[str]

    app = FastAPI(title="skillrank annotation service")

    def check_task(task_id: str) -> None:
        if task_id != service.task_id:
            raise HTTPException(404, detail={"error": "unknown_task", "message": task_id})

    @app.get("/tasks/{task_id}/hit")
    def get_hit(task_id: str, worker: str = Query(...)):
        check_task(task_id)
        hit = service.get_hit(worker)
        if hit is None:
            raise HTTPException(
                404, detail={"error": "no_hits_remaining", "message": "all HITs done"}
            )
        return hit.public_payload(service.shuffle_seed_for(hit.hit_id, worker))

    @app.post("/tasks/{task_id}/hits/{hit_id}/judgments")
    def submit(task_id: str, hit_id: str, body: SubmitBody):
        check_task(task_id)
        try:
            recorded = service.submit_judgments(hit_id, body.worker, body.choices)
        except HitProtocolError as e:
            raise HTTPException(e.status, detail={"error": e.code, "message": str(e)})
        return {"recorded": recorded, "hit_id": hit_id}

    @app.get("/tasks/{task_id}/judgments.jsonl")
    def export(task_id: str):
        check_task(task_id)
        lines = service.export_lines()
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""))

    @app.get("/media/{video_id}")
    def media(video_id: str):
        if media_dir is None:
            raise HTTPException(404, detail={"error": "no_media_dir", "message": ""})
        matches = sorted(Path(media_dir).glob(f"{video_id}.*"))
        if not matches:
            raise HTTPException(
                404, detail={"error": "unknown_video", "message": video_id}
            )
        return FileResponse(matches[0])

    @app.exception_handler(HTTPException)
    async def http_error(_, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {"error": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    return app
