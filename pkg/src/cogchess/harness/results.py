"""Run persistence, aggregate recomputation, and report emission.

A run directory is plain files, written append-only where it matters:

- ``records.jsonl``     — one line per graded question, flushed as soon as the
  question finishes, so a crash loses at most the in-flight question. Rows
  hold only deterministic fields: two runs over the same dataset, mock
  backend, and scripted engine produce byte-identical logs.
- ``run.json``          — the run summary (id, backend, per-quality aggregates,
  timestamps, config hash, reasoning bookkeeping).
- ``tasks.json``        — annotation tasks produced by the reasoning runner,
  plus the annotator quorum.
- ``annotations.jsonl`` — human rubric scores, appended by the annotation
  service.
- ``report.json`` / ``report.md`` — emitted on demand from the above.

Aggregates are never trusted from ``run.json`` alone: they can always be
recomputed from the per-question rows (plus annotations for reasoning), and
the two must agree to 1e-12.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

from ..scoring import (
    AnticipationInput,
    MoveAnnotation,
    anticipation_score,
    exact_match_score,
    perception_score,
    reasoning_score,
)
from .dataset import QUALITIES
from .runner import AnnotationTask, QualityRun, QuestionRecord

PENDING = "pending"
DEFAULT_QUORUM = 1
MAX_QUORUM = 4

RECORDS_FILE = "records.jsonl"
RUN_FILE = "run.json"
TASKS_FILE = "tasks.json"
ANNOTATIONS_FILE = "annotations.jsonl"


class ResultsError(RuntimeError):
    pass


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def config_hash(payload: Mapping) -> str:
    """Stable 16-hex-digit digest of the run configuration."""
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()[:16]


class RecordsLog:
    """Append-only JSONL writer; every row is flushed and fsynced."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: QuestionRecord) -> None:
        self._fh.write(_canonical(record.to_dict()) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


def read_records(path) -> List[QuestionRecord]:
    rows = []
    path = Path(path)
    if not path.exists():
        return rows
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(QuestionRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ResultsError(f"{path}:{lineno}: bad record: {exc}") from None
    return rows


def read_annotations(path) -> List[dict]:
    rows = []
    path = Path(path)
    if not path.exists():
        return rows
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ResultsError(f"{path}:{lineno}: bad annotation: {exc}") from None
            for key in ("task_id", "annotator", "score"):
                if key not in row:
                    raise ResultsError(f"{path}:{lineno}: annotation missing {key!r}")
            rows.append(row)
    return rows


# ----------------------------------------------------------- reasoning value


def task_status(task_id: str, annotations: Sequence[Mapping], quorum: int) -> str:
    annotators = {a["annotator"] for a in annotations if a["task_id"] == task_id}
    return "done" if len(annotators) >= quorum else "pending"


def reasoning_value(
    tasks: Sequence[AnnotationTask],
    annotations: Sequence[Mapping],
    reasoning_runs: Mapping[str, int],
    *,
    quorum: int,
    total_questions: Optional[int] = None,
) -> Union[float, str]:
    """Current reasoning aggregate: ``"pending"`` until every task has met the
    annotator quorum, then the rubric aggregate.

    ``total_questions`` widens the denominator when some reasoning questions
    failed outright and so produced no tasks (they count as zero).
    """
    if not tasks:
        return 0.0
    by_task = {t.task_id: t for t in tasks}
    for task in tasks:
        if task_status(task.task_id, annotations, quorum) == "pending":
            return PENDING
    marks = []
    for row in annotations:
        task = by_task.get(row["task_id"])
        if task is None:
            continue
        marks.append(
            MoveAnnotation(
                puzzle_id=task.puzzle_id,
                move_index=task.move_index,
                annotator=str(row["annotator"]),
                score=int(row["score"]),
            )
        )
    value = reasoning_score(marks, dict(reasoning_runs))
    annotated = len({t.puzzle_id for t in tasks})
    total = annotated if total_questions is None else max(total_questions, annotated)
    return value * annotated / total


# ------------------------------------------------------------- recomputation


def recompute_quality(
    quality: str,
    records: Sequence[QuestionRecord],
    *,
    tasks: Sequence[AnnotationTask] = (),
    annotations: Sequence[Mapping] = (),
    reasoning_runs: Optional[Mapping[str, int]] = None,
    quorum: int = DEFAULT_QUORUM,
) -> Union[float, str]:
    """Recompute one quality's aggregate from its per-question rows via the
    scoring module. For reasoning this needs the tasks and annotations too."""
    rows = [r for r in records if r.quality == quality]
    if not rows:
        raise ResultsError(f"no records for quality {quality!r}")
    if quality == "perception":
        sums = {"fen-position": 0.0, "capture-count": 0.0, "piece-status": 0.0}
        for row in rows:
            sums[row.subtype] += row.score
        return perception_score(
            sums["fen-position"], sums["capture-count"], sums["piece-status"], len(rows)
        )
    if quality in ("memory", "attention"):
        return exact_match_score(sum(r.score for r in rows), len(rows))
    if quality == "anticipation":
        inputs = [
            AnticipationInput(
                puzzle_id=r.question_id, matched=r.matched, system_moves=r.n_sys
            )
            for r in rows
        ]
        return anticipation_score(inputs)
    if quality == "reasoning":
        return reasoning_value(
            tasks,
            annotations,
            reasoning_runs or {},
            quorum=quorum,
            total_questions=len(rows),
        )
    raise ResultsError(f"unknown quality {quality!r}")


# ------------------------------------------------------------- run documents


@dataclass
class RunData:
    """Everything a run directory holds, loaded back."""

    path: Path
    run: dict
    records: List[QuestionRecord]
    tasks: List[AnnotationTask]
    quorum: int
    annotations: List[dict]

    @property
    def reasoning_runs(self) -> Mapping[str, int]:
        return self.run.get("reasoning_runs", {})

    def per_quality_now(self) -> dict:
        """Aggregates recomputed from disk, reasoning included live."""
        out = {}
        for quality in self.run.get("qualities", QUALITIES):
            out[quality] = recompute_quality(
                quality,
                self.records,
                tasks=self.tasks,
                annotations=self.annotations,
                reasoning_runs=self.reasoning_runs,
                quorum=self.quorum,
            )
        return out


def write_run(
    out_dir,
    *,
    run_id: str,
    backend_summary: Mapping,
    quality_runs: Sequence[QualityRun],
    dataset_info: Mapping,
    engine_info: str,
    quorum: int,
    started: str,
    finished: str,
    cfg_hash: str,
) -> dict:
    """Write run.json and tasks.json for a finished run; records.jsonl is
    expected to have been appended while the run progressed."""
    out = Path(out_dir)
    per_quality = {}
    reasoning_runs: dict = {}
    tasks: list = []
    for qrun in quality_runs:
        per_quality[qrun.quality] = PENDING if qrun.aggregate is None else qrun.aggregate
        reasoning_runs.update(qrun.reasoning_runs)
        tasks.extend(qrun.tasks)

    run = {
        "run_id": run_id,
        "backend": dict(backend_summary),
        "per_quality": per_quality,
        "timestamps": {"started": started, "finished": finished},
        "config_hash": cfg_hash,
        "dataset": dict(dataset_info),
        "engine": engine_info,
        "quorum": quorum,
        "qualities": [qr.quality for qr in quality_runs],
        "reasoning_runs": reasoning_runs,
    }
    _atomic_write(out / RUN_FILE, json.dumps(run, indent=2, sort_keys=True) + "\n")
    _atomic_write(
        out / TASKS_FILE,
        json.dumps(
            {"quorum": quorum, "tasks": [t.to_dict() for t in tasks]},
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    annotations_path = out / ANNOTATIONS_FILE
    if not annotations_path.exists():
        annotations_path.touch()
    return run


def load_run(run_dir) -> RunData:
    run_dir = Path(run_dir)
    run_path = run_dir / RUN_FILE
    if not run_path.exists():
        raise ResultsError(f"{run_dir}: no {RUN_FILE} (not a run directory?)")
    with open(run_path, "r", encoding="utf-8") as fh:
        run = json.load(fh)
    tasks_path = run_dir / TASKS_FILE
    tasks: List[AnnotationTask] = []
    quorum = DEFAULT_QUORUM
    if tasks_path.exists():
        with open(tasks_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        quorum = int(raw.get("quorum", DEFAULT_QUORUM))
        tasks = [AnnotationTask.from_dict(row) for row in raw.get("tasks", [])]
    return RunData(
        path=run_dir,
        run=run,
        records=read_records(run_dir / RECORDS_FILE),
        tasks=tasks,
        quorum=quorum,
        annotations=read_annotations(run_dir / ANNOTATIONS_FILE),
    )


def verify_run(data: RunData, *, tolerance: float = 1e-12) -> None:
    """Check the stored per-quality aggregates against recomputation."""
    stored = data.run.get("per_quality", {})
    for quality, value in stored.items():
        fresh = recompute_quality(
            quality,
            data.records,
            tasks=data.tasks,
            annotations=data.annotations,
            reasoning_runs=data.reasoning_runs,
            quorum=data.quorum,
        )
        if value == PENDING or fresh == PENDING:
            # Reasoning may legitimately have progressed from pending to a
            # value since run.json was written, but never the reverse.
            if value == PENDING:
                continue
            raise ResultsError(f"{quality}: stored {value!r} but recomputed pending")
        if abs(float(value) - float(fresh)) > tolerance:
            raise ResultsError(
                f"{quality}: stored {value!r} disagrees with recomputed {fresh!r}"
            )


# ------------------------------------------------------------------- reports


def _format_value(value) -> str:
    return value if isinstance(value, str) else f"{value:.4f}"


def emit_report(run_dirs: Sequence, out_dir=None) -> Tuple[Path, Path]:
    """Write report.json and report.md covering one or more runs.

    Reasoning aggregates are recomputed live from annotations, so a report
    emitted after annotation shows the rubric value even though the original
    run recorded "pending"."""
    if not run_dirs:
        raise ResultsError("emit_report needs at least one run directory")
    datas = [load_run(d) for d in run_dirs]
    target = Path(out_dir) if out_dir is not None else datas[0].path

    runs_payload = []
    for data in datas:
        per_quality = data.per_quality_now()
        counts = {
            quality: sum(1 for r in data.records if r.quality == quality)
            for quality in data.run.get("qualities", [])
        }
        done = sum(
            1 for t in data.tasks if task_status(t.task_id, data.annotations, data.quorum) == "done"
        )
        runs_payload.append(
            {
                "run_id": data.run.get("run_id"),
                "backend": data.run.get("backend", {}),
                "per_quality": per_quality,
                "question_counts": counts,
                "question_ids": [r.question_id for r in data.records],
                "annotation_progress": {"done": done, "total": len(data.tasks)},
                "config_hash": data.run.get("config_hash"),
            }
        )

    report = {
        "generated": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "runs": runs_payload,
    }
    json_path = target / "report.json"
    _atomic_write(json_path, json.dumps(report, indent=2, sort_keys=True) + "\n")

    lines = ["# Evaluation report", ""]
    header = "| backend | " + " | ".join(QUALITIES) + " |"
    rule = "|---" * (len(QUALITIES) + 1) + "|"
    lines += [header, rule]
    for payload in runs_payload:
        backend = payload["backend"]
        name = f"{backend.get('kind', '?')}:{backend.get('model', '?')}"
        cells = [
            _format_value(payload["per_quality"].get(q, "-")) for q in QUALITIES
        ]
        lines.append("| " + " | ".join([name] + cells) + " |")
    lines.append("")
    for payload in runs_payload:
        lines.append(f"## Run {payload['run_id']}")
        lines.append("")
        lines.append(f"- config hash: `{payload['config_hash']}`")
        progress = payload["annotation_progress"]
        lines.append(f"- annotation tasks done: {progress['done']}/{progress['total']}")
        for quality, count in sorted(payload["question_counts"].items()):
            value = _format_value(payload["per_quality"].get(quality, "-"))
            lines.append(f"- {quality}: {count} questions, score {value}")
        lines.append("")
    md_path = target / "report.md"
    _atomic_write(md_path, "\n".join(lines))
    return json_path, md_path
