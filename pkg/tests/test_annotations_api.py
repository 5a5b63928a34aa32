"""Annotation service: task listing, rubric, submissions, live aggregates."""

import json

import pytest
from fastapi.testclient import TestClient

from cogchess.harness.annotations import (
    RUBRIC_LABELS,
    AnnotationBook,
    build_app,
    default_ui_dir,
    load_rubric,
)
from cogchess.harness.results import ANNOTATIONS_FILE, RECORDS_FILE, RecordsLog, write_run
from cogchess.harness.runner import AnnotationTask, QualityRun, QuestionRecord


def make_run(out_dir, *, quorum=1):
    """A run with one memory question and two reasoning puzzles (3 tasks)."""
    log = RecordsLog(out_dir / RECORDS_FILE)
    rows = [
        QuestionRecord(question_id="m1", quality="memory", subtype="base-knowledge", score=1.0),
        QuestionRecord(question_id="r1", quality="reasoning", subtype="puzzle",
                       score=None, n_sys=1, task_ids=("p1-m1",)),
        QuestionRecord(question_id="r2", quality="reasoning", subtype="puzzle",
                       score=None, n_sys=2, task_ids=("p2-m1", "p2-m2")),
    ]
    for row in rows:
        log.append(row)
    log.close()
    tasks = (
        AnnotationTask("p1-m1", "p1", 1, "8/8/8/8/8/8/8/8 w - - 0 1", "Qa1", "first move"),
        AnnotationTask("p2-m1", "p2", 1, "8/8/8/8/8/8/8/8 w - - 0 1", "Rb2", "second puzzle"),
        AnnotationTask("p2-m2", "p2", 2, "8/8/8/8/8/8/8/8 b - - 0 1", "Kc3", "follow-up"),
    )
    write_run(
        out_dir,
        run_id="run-api-test",
        backend_summary={"kind": "mock", "model": "mock-1", "endpoint": None},
        quality_runs=[
            QualityRun("memory", (rows[0],), 1.0),
            QualityRun("reasoning", tuple(rows[1:]), None, tasks, {"p1": 1, "p2": 2}),
        ],
        dataset_info={"path": "d.json", "sha256": "0" * 64},
        engine_info="scripted-reference",
        quorum=quorum,
        started="2026-01-01T00:00:00+00:00",
        finished="2026-01-01T00:00:01+00:00",
        cfg_hash="f" * 16,
    )
    return out_dir


@pytest.fixture()
def client(tmp_path):
    return TestClient(build_app(make_run(tmp_path)))


class TestTaskListing:
    def test_pending_listing(self, client):
        body = client.get("/api/tasks", params={"status": "pending"}).json()
        assert [t["task_id"] for t in body["tasks"]] == ["p1-m1", "p2-m1", "p2-m2"]
        assert body["progress"] == {"done": 0, "total": 3}
        assert body["quorum"] == 1
        row = body["tasks"][0]
        assert row["puzzle_id"] == "p1" and row["status"] == "pending"
        assert row["n_annotations"] == 0

    def test_done_listing_empty_at_start(self, client):
        assert client.get("/api/tasks", params={"status": "done"}).json()["tasks"] == []

    def test_bad_filter(self, client):
        assert client.get("/api/tasks", params={"status": "weird"}).status_code == 400

    def test_detail_carries_rubric_and_position(self, client):
        body = client.get("/api/tasks/p1-m1").json()
        assert body["task_id"] == "p1-m1"
        assert body["fen_before"].endswith("w - - 0 1")
        assert body["engine_move"] == "Qa1"
        assert body["explanation"] == "first move"
        assert [row["label"] for row in body["rubric"]] == list(RUBRIC_LABELS)
        assert [row["score"] for row in body["rubric"]] == [0, 1, 2, 3, 4, 5]
        assert all(row["guidance"] for row in body["rubric"])
        assert body["collected"] == []

    def test_unknown_task_404(self, client):
        assert client.get("/api/tasks/ghost").status_code == 404


class TestSubmission:
    def test_full_annotation_round(self, client):
        # p1: 5 -> 1.0 ; p2: 4 and 3 -> 0.7 ; reasoning mean = 0.85
        for task_id, score in [("p1-m1", 5), ("p2-m1", 4)]:
            response = client.post(f"/api/tasks/{task_id}/annotations",
                                   json={"annotator": "alice", "score": score})
            assert response.status_code == 201
            assert response.json()["per_quality"]["reasoning"] == "pending"
        response = client.post("/api/tasks/p2-m2/annotations",
                               json={"annotator": "alice", "score": 3})
        assert response.status_code == 201
        body = response.json()
        assert body["per_quality"]["reasoning"] == pytest.approx(0.85)
        assert body["per_quality"]["memory"] == 1.0
        assert body["progress"] == {"done": 3, "total": 3}
        assert body["task"]["status"] == "done"

    def test_duplicate_annotator_conflict(self, client):
        assert client.post("/api/tasks/p1-m1/annotations",
                           json={"annotator": "alice", "score": 5}).status_code == 201
        response = client.post("/api/tasks/p1-m1/annotations",
                               json={"annotator": "alice", "score": 4})
        assert response.status_code == 409

    def test_second_annotator_allowed(self, client):
        client.post("/api/tasks/p1-m1/annotations", json={"annotator": "alice", "score": 5})
        assert client.post("/api/tasks/p1-m1/annotations",
                           json={"annotator": "bob", "score": 4}).status_code == 201

    def test_unknown_task(self, client):
        assert client.post("/api/tasks/ghost/annotations",
                           json={"annotator": "alice", "score": 5}).status_code == 404

    @pytest.mark.parametrize("score", [-1, 6, 99])
    def test_score_out_of_range(self, client, score):
        response = client.post("/api/tasks/p1-m1/annotations",
                               json={"annotator": "alice", "score": score})
        assert response.status_code == 400

    def test_blank_annotator(self, client):
        response = client.post("/api/tasks/p1-m1/annotations",
                               json={"annotator": "   ", "score": 5})
        assert response.status_code == 400

    def test_missing_fields_rejected(self, client):
        assert client.post("/api/tasks/p1-m1/annotations", json={"score": 5}).status_code == 422
        assert client.post("/api/tasks/p1-m1/annotations",
                           json={"annotator": "alice"}).status_code == 422

    def test_progress_is_monotonic(self, client):
        done_values = [client.get("/api/tasks").json()["progress"]["done"]]
        for task_id in ("p1-m1", "p2-m1", "p2-m2"):
            client.post(f"/api/tasks/{task_id}/annotations",
                        json={"annotator": "alice", "score": 2})
            done_values.append(client.get("/api/tasks").json()["progress"]["done"])
        # extra annotators never reduce progress
        client.post("/api/tasks/p1-m1/annotations", json={"annotator": "bob", "score": 5})
        done_values.append(client.get("/api/tasks").json()["progress"]["done"])
        assert done_values == sorted(done_values)
        assert done_values[-1] == 3


class TestQuorum:
    def test_quorum_two_needs_two_annotators(self, tmp_path):
        client = TestClient(build_app(make_run(tmp_path), quorum=2))
        client.post("/api/tasks/p1-m1/annotations", json={"annotator": "alice", "score": 5})
        listing = client.get("/api/tasks", params={"status": "pending"}).json()
        assert "p1-m1" in [t["task_id"] for t in listing["tasks"]]
        client.post("/api/tasks/p1-m1/annotations", json={"annotator": "bob", "score": 4})
        listing = client.get("/api/tasks", params={"status": "done"}).json()
        assert [t["task_id"] for t in listing["tasks"]] == ["p1-m1"]

    def test_run_quorum_respected_without_override(self, tmp_path):
        client = TestClient(build_app(make_run(tmp_path, quorum=2)))
        assert client.get("/api/tasks").json()["quorum"] == 2

    def test_bad_quorum_override(self, tmp_path):
        with pytest.raises(ValueError):
            build_app(make_run(tmp_path), quorum=9)


class TestPersistence:
    def test_annotations_survive_restart(self, tmp_path):
        run_dir = make_run(tmp_path)
        client = TestClient(build_app(run_dir))
        client.post("/api/tasks/p1-m1/annotations", json={"annotator": "alice", "score": 5})
        # a fresh service over the same directory sees the stored score
        reopened = TestClient(build_app(run_dir))
        detail = reopened.get("/api/tasks/p1-m1").json()
        assert detail["collected"] == [{"annotator": "alice", "score": 5}]
        lines = (run_dir / ANNOTATIONS_FILE).read_text(encoding="utf-8").strip().splitlines()
        rows = [json.loads(line) for line in lines]
        assert rows[0]["task_id"] == "p1-m1" and rows[0]["score"] == 5
        assert "timestamp" in rows[0]

    def test_duplicate_rejected_across_restart(self, tmp_path):
        run_dir = make_run(tmp_path)
        TestClient(build_app(run_dir)).post(
            "/api/tasks/p1-m1/annotations", json={"annotator": "alice", "score": 5})
        reopened = TestClient(build_app(run_dir))
        response = reopened.post("/api/tasks/p1-m1/annotations",
                                 json={"annotator": "alice", "score": 1})
        assert response.status_code == 409


class TestReportEndpoint:
    def test_report_shape(self, client):
        body = client.get("/api/report").json()
        assert body["run_id"] == "run-api-test"
        assert body["backend"]["kind"] == "mock"
        assert body["per_quality"]["memory"] == 1.0
        assert body["per_quality"]["reasoning"] == "pending"
        assert body["progress"] == {"done": 0, "total": 3}


class TestStaticUi:
    def test_fallback_page_served_without_ui_build(self, tmp_path):
        run_dir = make_run(tmp_path)
        client = TestClient(build_app(run_dir, ui_dir=tmp_path / "no-such-ui"))
        response = client.get("/")
        assert response.status_code == 200
        assert "annotation" in response.text.lower()
        assert "/api/tasks" in response.text

    def test_custom_ui_dir_mounted(self, tmp_path):
        (tmp_path / "run").mkdir()
        run_dir = make_run(tmp_path / "run")
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<h1>annotation console</h1>", encoding="utf-8")
        client = TestClient(build_app(run_dir, ui_dir=ui))
        response = client.get("/")
        assert response.status_code == 200
        assert "annotation console" in response.text

    def test_default_ui_dir_contract(self):
        found = default_ui_dir()
        assert found is None or (found / "index.html").exists()

    def test_packaged_ui_served_when_built(self, tmp_path):
        if default_ui_dir() is None:
            pytest.skip("no packaged UI build installed")
        run_dir = make_run(tmp_path)
        client = TestClient(build_app(run_dir))
        page = client.get("/")
        assert page.status_code == 200
        assert 'id="app"' in page.text
        assert client.get("/styles.css").status_code == 200
        assert client.get("/js/main.js").status_code == 200
        # Static mounting must not shadow the API routes.
        assert client.get("/api/report").status_code == 200


class TestBookAndRubric:
    def test_rubric_labels_fixed(self):
        scale = load_rubric()
        assert tuple(r["label"] for r in scale) == RUBRIC_LABELS
        assert RUBRIC_LABELS == (
            "Inadequate", "Deficient", "Satisfactory", "Competent", "Proficient", "Exemplary",
        )

    def test_rubric_rejects_wrong_labels(self, tmp_path):
        bad = {"scale": [{"score": i, "label": f"L{i}", "guidance": "g"} for i in range(6)]}
        path = tmp_path / "rubric.json"
        path.write_text(json.dumps(bad), encoding="utf-8")
        with pytest.raises(ValueError, match="labels"):
            load_rubric(path)

    def test_book_rejects_bool_score(self, tmp_path):
        book = AnnotationBook(make_run(tmp_path))
        with pytest.raises(ValueError):
            book.submit("p1-m1", "alice", True)

    def test_book_unknown_task(self, tmp_path):
        book = AnnotationBook(make_run(tmp_path))
        with pytest.raises(KeyError):
            book.submit("ghost", "alice", 3)
