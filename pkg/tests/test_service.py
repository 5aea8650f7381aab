import itertools

import pytest
from fastapi.testclient import TestClient

from skillrank.annotation import Judgment, consensus, pair_key, qc_filter
from skillrank.errors import ServiceError
from skillrank.service import (
    AnnotationService,
    HitProtocolError,
    QcPair,
    build_hits,
    create_app,
)

QC = [QcPair("X", "Y", "X")]


def eight_pairs():
    videos = [f"v{k}" for k in range(8)]
    return [(videos[k], videos[k + 1]) for k in range(7)] + [("v0", "v7")]


# --- build_hits ----------------------------------------------------------------

def test_eight_pairs_make_eight_hits():
    hits = build_hits("t", eight_pairs(), QC, workers_per_pair=4, seed=0)
    assert len(hits) == 8  # 8 pairs * 4 workers / 4 task pairs per HIT
    coverage = {pair_key(i, j): 0 for i, j in eight_pairs()}
    for hit in hits:
        task_pairs = [p for p in hit.pairs if not p.is_quality_control]
        assert len(task_pairs) == 4 and len(hit.pairs) == 5
        assert len({p.key for p in task_pairs}) == 4
        for p in task_pairs:
            coverage[p.key] += 1
    assert all(count == 4 for count in coverage.values())


def test_too_few_pairs_rejected():
    with pytest.raises(ServiceError, match="at least 4"):
        build_hits("t", eight_pairs()[:3], QC, seed=0)


def test_empty_qc_pool_rejected():
    with pytest.raises(ServiceError, match="quality-control"):
        build_hits("t", eight_pairs(), [], seed=0)


def test_indivisible_coverage_rejected():
    with pytest.raises(ServiceError, match="divisible"):
        build_hits("t", eight_pairs()[:5], QC, workers_per_pair=3, seed=0)


def test_build_hits_deterministic():
    a = build_hits("t", eight_pairs(), QC, seed=9)
    b = build_hits("t", eight_pairs(), QC, seed=9)
    assert [h.pairs for h in a] == [h.pairs for h in b]


# --- assignment and submission ----------------------------------------------------

def make_service(tmp_path, n_pairs=8, workers_per_pair=4, seed=0):
    hits = build_hits("t", eight_pairs()[:n_pairs], QC, workers_per_pair, seed=seed)
    return AnnotationService(
        task_id="t",
        hits=hits,
        qc_truth=AnnotationService.from_qc_pool(QC),
        store_path=tmp_path / "judgments.jsonl",
        seed=seed,
    )


def submit_all(service, hit, worker, choice="i_better"):
    return service.submit_judgments(hit.hit_id, worker, [choice] * 5)


def test_assignment_is_idempotent(tmp_path):
    service = make_service(tmp_path)
    first = service.get_hit("w0")
    again = service.get_hit("w0")
    assert first is again


def test_in_flight_hit_served_before_new_assignments(tmp_path):
    # Even if an earlier HIT frees up, a worker's open assignment wins.
    service = make_service(tmp_path)
    first = service.get_hit("w0")
    later = service.get_hit("w1")
    assert later is service.get_hit("w1")
    assert first is service.get_hit("w0")


def test_two_workers_get_distinct_hits(tmp_path):
    service = make_service(tmp_path)
    a = service.get_hit("w0")
    b = service.get_hit("w1")
    assert a.hit_id != b.hit_id


def test_submission_appends_five_judgments(tmp_path):
    service = make_service(tmp_path)
    hit = service.get_hit("w0")
    assert submit_all(service, hit, "w0") == 5
    lines = service.export_lines()
    assert len(lines) == 5
    judgments = [Judgment.from_json(line) for line in lines]
    assert sum(j.is_quality_control for j in judgments) == 1


def test_wrong_choice_count_rejected(tmp_path):
    service = make_service(tmp_path)
    hit = service.get_hit("w0")
    with pytest.raises(HitProtocolError) as err:
        service.submit_judgments(hit.hit_id, "w0", ["i_better"] * 4)
    assert err.value.code == "wrong_choice_count"


def test_duplicate_submission_conflicts_and_store_unchanged(tmp_path):
    service = make_service(tmp_path)
    hit = service.get_hit("w0")
    submit_all(service, hit, "w0")
    before = service.export_lines()
    with pytest.raises(HitProtocolError) as err:
        submit_all(service, hit, "w0")
    assert err.value.code == "duplicate_submission"
    assert service.export_lines() == before


def test_wrong_worker_rejected(tmp_path):
    service = make_service(tmp_path)
    hit = service.get_hit("w0")
    with pytest.raises(HitProtocolError) as err:
        submit_all(service, hit, "w1")
    assert err.value.code == "wrong_worker"


def test_worker_never_sees_same_pair_twice(tmp_path):
    service = make_service(tmp_path)
    seen: set = set()
    while True:
        hit = service.get_hit("w0")
        if hit is None:
            break
        keys = {p.key for p in hit.pairs if not p.is_quality_control}
        assert not keys & seen
        seen |= keys
        submit_all(service, hit, "w0")


def test_exhaustion_returns_none(tmp_path):
    service = make_service(tmp_path, n_pairs=4)
    workers = [f"w{k}" for k in range(4)]
    for worker in workers:
        hit = service.get_hit(worker)
        submit_all(service, hit, worker)
    assert service.get_hit("w9") is None


def test_every_pair_collects_four_judgments(tmp_path):
    service = make_service(tmp_path)
    worker_iter = (f"w{k}" for k in itertools.count())
    done = 0
    while done < len(service.hits):
        worker = next(worker_iter)
        while True:
            hit = service.get_hit(worker)
            if hit is None:
                break
            submit_all(service, hit, worker)
            done += 1
    judgments = [Judgment.from_json(line) for line in service.export_lines()]
    per_pair: dict = {}
    for j in judgments:
        if not j.is_quality_control:
            per_pair.setdefault(pair_key(j.i, j.j), []).append(j)
    assert all(len(group) == 4 for group in per_pair.values())
    # Distinct workers per pair, by construction of the no-repeat rule.
    assert all(len({j.worker_id for j in group}) == 4 for group in per_pair.values())


def test_store_is_append_only_and_replayable(tmp_path):
    service = make_service(tmp_path)
    hit = service.get_hit("w0")
    submit_all(service, hit, "w0")
    before = service.export_lines()

    # Restart: a new service over the same store sees the submission.
    fresh = make_service(tmp_path)
    assert fresh.export_lines() == before
    assert hit.hit_id in fresh.submitted
    replayed = fresh.get_hit("w0")
    assert replayed is None or replayed.hit_id != hit.hit_id


# --- HTTP layer ----------------------------------------------------------------

@pytest.fixture
def client(tmp_path):
    service = make_service(tmp_path, n_pairs=4)
    app = create_app(service, media_dir=tmp_path / "media")
    return TestClient(app), service


def test_http_hit_payload_hides_quality_control(client):
    http, _ = client
    payload = http.get("/tasks/t/hit", params={"worker": "w0"}).json()
    assert set(payload) == {"hit_id", "task_id", "pairs", "shuffle_seed"}
    assert all(set(p) == {"i", "j"} for p in payload["pairs"])
    assert len(payload["pairs"]) == 5


def test_http_submit_and_export_round_trip(client):
    http, _ = client
    payload = http.get("/tasks/t/hit", params={"worker": "w0"}).json()
    response = http.post(
        f"/tasks/t/hits/{payload['hit_id']}/judgments",
        json={"worker": "w0", "choices": ["i_better"] * 5},
    )
    assert response.status_code == 200 and response.json()["recorded"] == 5
    exported = http.get("/tasks/t/judgments.jsonl").text.strip().splitlines()
    judgments = [Judgment.from_json(line) for line in exported]
    assert len(judgments) == 5
    # The exported stream feeds qc_filter/consensus without error.
    survivors = qc_filter(judgments, {pair_key("X", "Y"): "X"})
    assert len(survivors) == 5


def test_http_duplicate_submission_is_409(client):
    http, _ = client
    payload = http.get("/tasks/t/hit", params={"worker": "w0"}).json()
    body = {"worker": "w0", "choices": ["i_better"] * 5}
    assert http.post(f"/tasks/t/hits/{payload['hit_id']}/judgments", json=body).status_code == 200
    response = http.post(f"/tasks/t/hits/{payload['hit_id']}/judgments", json=body)
    assert response.status_code == 409
    assert response.json()["error"] == "duplicate_submission"


def test_http_no_hits_remaining_is_404(client):
    http, service = client
    for worker in ("w0", "w1", "w2", "w3"):
        payload = http.get("/tasks/t/hit", params={"worker": worker}).json()
        http.post(
            f"/tasks/t/hits/{payload['hit_id']}/judgments",
            json={"worker": worker, "choices": ["i_better"] * 5},
        )
    response = http.get("/tasks/t/hit", params={"worker": "w9"})
    assert response.status_code == 404
    assert response.json()["error"] == "no_hits_remaining"


def test_http_media_serves_files(tmp_path):
    service = make_service(tmp_path, n_pairs=4)
    media = tmp_path / "media"
    media.mkdir()
    (media / "v0.mp4").write_bytes(b"fake video")
    http = TestClient(create_app(service, media_dir=media))
    assert http.get("/media/v0").content == b"fake video"
    assert http.get("/media/ghost").status_code == 404


def test_empty_store_exports_empty(client):
    http, _ = client
    assert http.get("/tasks/t/judgments.jsonl").text == ""


def test_full_loop_consensus(tmp_path):
    # All HITs answered: unanimity yields consistent outcomes end to end.
    service = make_service(tmp_path, n_pairs=4)
    for worker in ("w0", "w1", "w2", "w3"):
        hit = service.get_hit(worker)
        choices = []
        for pair in hit.pairs:
            # Winner = lexicographically smaller id, so answers are unanimous.
            choices.append("i_better" if pair.i < pair.j else "j_better")
        service.submit_judgments(hit.hit_id, worker, choices)
    judgments = [Judgment.from_json(line) for line in service.export_lines()]
    survivors = qc_filter(judgments, AnnotationService.from_qc_pool(QC))
    outcomes = consensus(survivors, workers_per_pair=4)
    assert len(outcomes) == 4
    assert all(o.consistent for o in outcomes.values())
