"""HTTP annotation service.

Human annotators score each explained system move on the 0-5 rubric. The
service owns a run directory: tasks come from ``tasks.json``, submissions are
appended to ``annotations.jsonl`` (one fsynced line each, so a crash never
corrupts earlier scores), and the reasoning aggregate is recomputed from disk
state on every submission.

API (all JSON):

- ``GET  /api/tasks?status=pending|done|all`` — task list with progress.
- ``GET  /api/tasks/<id>``                    — full task: position FEN, the
  system move (SAN), the model's explanation, the rubric scale, and the
  scores collected so far.
- ``POST /api/tasks/<id>/annotations``        — body ``{"annotator", "score"}``;
  rejects scores outside 0-5, blank annotators, duplicates, unknown tasks.
- ``GET  /api/report``                        — current per-quality aggregates.

The annotation UI is served as static files from ``/`` when a build is
present; otherwise a minimal built-in page explains where the API lives.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import threading
from importlib import resources
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .results import (
    ANNOTATIONS_FILE,
    DEFAULT_QUORUM,
    MAX_QUORUM,
    RunData,
    load_run,
    task_status,
)

RUBRIC_LABELS = ("Inadequate", "Deficient", "Satisfactory", "Competent", "Proficient", "Exemplary")


def load_rubric(path=None) -> list:
    """The six-row scoring scale shown to annotators."""
    if path is None:
        source = resources.files("cogchess").joinpath("data/rubric.json")
        raw = json.loads(source.read_text(encoding="utf-8"))
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    scale = raw["scale"]
    labels = tuple(row["label"] for row in scale)
    if labels != RUBRIC_LABELS:
        raise ValueError(f"rubric labels must be {RUBRIC_LABELS}, got {labels}")
    return scale


class AnnotationBook:
    """Disk-backed annotation state for one run directory."""

    def __init__(self, run_dir, *, quorum: Optional[int] = None):
        self._lock = threading.Lock()
        self.data: RunData = load_run(run_dir)
        if quorum is not None:
            if not 1 <= quorum <= MAX_QUORUM:
                raise ValueError(f"quorum must be in 1..{MAX_QUORUM}, got {quorum}")
            self.data.quorum = quorum
        self.annotations_path = Path(run_dir) / ANNOTATIONS_FILE

    @property
    def quorum(self) -> int:
        return self.data.quorum

    def _status(self, task_id: str) -> str:
        return task_status(task_id, self.data.annotations, self.quorum)

    def progress(self) -> dict:
        done = sum(1 for t in self.data.tasks if self._status(t.task_id) == "done")
        return {"done": done, "total": len(self.data.tasks)}

    def tasks_view(self, status: str = "all") -> list:
        rows = []
        for task in self.data.tasks:
            current = self._status(task.task_id)
            if status != "all" and current != status:
                continue
            collected = [a for a in self.data.annotations if a["task_id"] == task.task_id]
            rows.append(
                {
                    "task_id": task.task_id,
                    "puzzle_id": task.puzzle_id,
                    "move_index": task.move_index,
                    "status": current,
                    "n_annotations": len(collected),
                }
            )
        return rows

    def task_detail(self, task_id: str) -> dict:
        for task in self.data.tasks:
            if task.task_id == task_id:
                collected = [
                    {"annotator": a["annotator"], "score": a["score"]}
                    for a in self.data.annotations
                    if a["task_id"] == task_id
                ]
                detail = task.to_dict()
                detail["status"] = self._status(task_id)
                detail["collected"] = collected
                return detail
        raise KeyError(task_id)

    def per_quality(self) -> dict:
        return self.data.per_quality_now()

    def submit(self, task_id: str, annotator: str, score) -> dict:
        if not any(t.task_id == task_id for t in self.data.tasks):
            raise KeyError(task_id)
        if not isinstance(annotator, str) or not annotator.strip():
            raise ValueError("annotator must be a non-empty string")
        if isinstance(score, bool) or not isinstance(score, int) or not 0 <= score <= 5:
            raise ValueError(f"score must be an integer in 0..5, got {score!r}")
        annotator = annotator.strip()
        with self._lock:
            for row in self.data.annotations:
                if row["task_id"] == task_id and row["annotator"] == annotator:
                    raise FileExistsError(f"annotator {annotator!r} already scored task {task_id!r}")
            row = {
                "task_id": task_id,
                "annotator": annotator,
                "score": score,
                "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            }
            with open(self.annotations_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.data.annotations.append(row)
        return self.task_detail(task_id)


class SubmissionIn(BaseModel):
    annotator: str
    score: int


_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>Annotation service</title></head>
<body>
<h1>Annotation service</h1>
<p>No UI build is installed. The API is live:</p>
<ul>
<li><code>GET /api/tasks?status=pending</code></li>
<li><code>GET /api/tasks/&lt;id&gt;</code></li>
<li><code>POST /api/tasks/&lt;id&gt;/annotations</code> with <code>{"annotator": "...", "score": 0-5}</code></li>
<li><code>GET /api/report</code></li>
</ul>
</body></html>
"""


def default_ui_dir() -> Optional[Path]:
    """The packaged UI build, when one is installed."""
    candidate = resources.files("cogchess.harness").joinpath("ui")
    try:
        path = Path(str(candidate))
    except TypeError:  # zip-installed package; no directory to serve
        return None
    if path.is_dir() and (path / "index.html").is_file():
        return path
    return None


def build_app(run_dir, *, quorum: Optional[int] = None, ui_dir=None, rubric_path=None) -> FastAPI:
    book = AnnotationBook(run_dir, quorum=quorum)
    rubric = load_rubric(rubric_path)
    app = FastAPI(title="cogchess annotation service", docs_url=None, redoc_url=None)
    app.state.book = book

    @app.get("/api/tasks")
    def list_tasks(status: str = "all"):
        if status not in ("all", "pending", "done"):
            raise HTTPException(status_code=400, detail=f"unknown status filter {status!r}")
        return {"tasks": book.tasks_view(status), "progress": book.progress(), "quorum": book.quorum}

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            detail = book.task_detail(task_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no task {task_id!r}") from None
        detail["rubric"] = rubric
        return detail

    @app.post("/api/tasks/{task_id}/annotations", status_code=201)
    def post_annotation(task_id: str, submission: SubmissionIn):
        try:
            detail = book.submit(task_id, submission.annotator, submission.score)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no task {task_id!r}") from None
        except FileExistsError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"task": detail, "per_quality": book.per_quality(), "progress": book.progress()}

    @app.get("/api/report")
    def report():
        return {
            "per_quality": book.per_quality(),
            "progress": book.progress(),
            "backend": book.data.run.get("backend", {}),
            "run_id": book.data.run.get("run_id"),
        }

    static_dir = Path(ui_dir) if ui_dir is not None else default_ui_dir()
    if static_dir is not None and static_dir.is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_PAGE

    return app


def serve_annotations(bind_address: str, run_dir, **kwargs) -> None:
    """Run the annotation service until interrupted."""
    import uvicorn

    host, _, port_text = bind_address.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"bind address must be host:port, got {bind_address!r}")
    app = build_app(run_dir, **kwargs)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
