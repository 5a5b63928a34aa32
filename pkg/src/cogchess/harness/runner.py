"""Per-quality evaluation runners.

Each runner turns a list of :class:`~cogchess.harness.dataset.Question` of one
quality into per-question records plus that quality's aggregate:

- perception   — ask the backend directly (position-analysis template), grade
  per subtype; aggregate combines the three per-category sums.
- memory       — route each prompt through the query router (store-update
  questions first apply their updates), grade extracted answers.
- attention    — same routing; book questions are graded on the retrieved
  chunk ids, off-domain questions accept either a graded answer or an
  explicit no-context flag.
- reasoning    — play each puzzle with the engine, generate one explanation
  per system move, and enqueue annotation tasks; the aggregate stays pending
  until human scores arrive.
- anticipation — play each puzzle and grade the prefix match against the
  reference solution.

A service failure (model, store, or engine) is recorded on the question,
scores it 0, and the run continues.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Tuple

from ..board import START_FEN, parse_fen
from ..engine import EngineError, EngineSession, Puzzle
from ..llm import LlmError, extract_answer, render_prompt
from ..moves import ChessError, apply_uci, is_checkmate
from ..router import (
    DEFAULT_SEARCH_K,
    QueryAnalyzer,
    Router,
    RouterError,
    UPDATE_PREFIX,
    default_templates,
)
from ..scoring import (
    AnticipationInput,
    anticipation_score,
    exact_match_score,
    match_prefix,
    perception_score,
)
from ..store import StoreError, VectorStore
from .dataset import QUALITIES, Question
from .grading import NO_CONTEXT_SENTINEL, GradeResult, grade_answer


class RunnerError(RuntimeError):
    """A quality cannot run at all (wrong questions, missing service)."""


@dataclass(frozen=True)
class QuestionRecord:
    """One graded question; the durable row in the records log."""

    question_id: str
    quality: str
    subtype: str
    raw_completion: Optional[str] = None
    extracted_answer: Optional[str] = None
    score: Optional[float] = None
    chunk_ids: Tuple[str, ...] = ()
    flags: Tuple[str, ...] = ()
    error: Optional[str] = None
    matched: Optional[int] = None
    n_sys: Optional[int] = None
    task_ids: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "quality": self.quality,
            "subtype": self.subtype,
            "raw_completion": self.raw_completion,
            "extracted_answer": self.extracted_answer,
            "score": self.score,
            "chunk_ids": list(self.chunk_ids),
            "flags": list(self.flags),
            "error": self.error,
            "matched": self.matched,
            "n_sys": self.n_sys,
            "task_ids": list(self.task_ids),
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "QuestionRecord":
        return cls(
            question_id=row["question_id"],
            quality=row["quality"],
            subtype=row["subtype"],
            raw_completion=row.get("raw_completion"),
            extracted_answer=row.get("extracted_answer"),
            score=row.get("score"),
            chunk_ids=tuple(row.get("chunk_ids") or ()),
            flags=tuple(row.get("flags") or ()),
            error=row.get("error"),
            matched=row.get("matched"),
            n_sys=row.get("n_sys"),
            task_ids=tuple(row.get("task_ids") or ()),
        )


@dataclass(frozen=True)
class AnnotationTask:
    """One explained system move awaiting human rubric scores."""

    task_id: str
    puzzle_id: str
    move_index: int
    fen_before: str
    engine_move: str
    explanation: str

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "puzzle_id": self.puzzle_id,
            "move_index": self.move_index,
            "fen_before": self.fen_before,
            "engine_move": self.engine_move,
            "explanation": self.explanation,
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "AnnotationTask":
        return cls(
            task_id=row["task_id"],
            puzzle_id=row["puzzle_id"],
            move_index=row["move_index"],
            fen_before=row["fen_before"],
            engine_move=row["engine_move"],
            explanation=row["explanation"],
        )


@dataclass
class Services:
    """Everything a runner may need beyond the model backend."""

    store: Optional[VectorStore] = None
    engine: Optional[EngineSession] = None
    puzzles: Mapping[str, Puzzle] = field(default_factory=dict)
    templates: Mapping[str, str] = field(default_factory=default_templates)
    analyzer: Optional[QueryAnalyzer] = None
    search_k: int = DEFAULT_SEARCH_K


@dataclass(frozen=True)
class QualityRun:
    """The outcome of one quality: rows, aggregate, and any follow-up work.

    ``aggregate`` is None while reasoning awaits annotations."""

    quality: str
    records: Tuple[QuestionRecord, ...]
    aggregate: Optional[float]
    tasks: Tuple[AnnotationTask, ...] = ()
    reasoning_runs: Mapping[str, int] = field(default_factory=dict)


def _render(templates: Mapping[str, str], name: str, **slots) -> str:
    return render_prompt(templates[name], slots, template_name=name)


def _service_failure(question: Question, exc: Exception) -> QuestionRecord:
    return QuestionRecord(
        question_id=question.id,
        quality=question.quality,
        subtype=question.subtype,
        score=0.0,
        flags=("service-failure",),
        error=f"{type(exc).__name__}: {exc}",
    )


def _check_questions(quality: str, questions: Sequence[Question]) -> None:
    if quality not in QUALITIES:
        raise RunnerError(f"unknown quality {quality!r}")
    if not questions:
        raise RunnerError(f"no questions for quality {quality!r}")
    stray = [q.id for q in questions if q.quality != quality]
    if stray:
        raise RunnerError(f"questions not of quality {quality!r}: {', '.join(stray)}")


# ---------------------------------------------------------------- perception


def _run_perception(questions: Sequence[Question], backend, services: Services, emit) -> QualityRun:
    records = []
    sums = {"fen-position": 0.0, "capture-count": 0.0, "piece-status": 0.0}
    for question in questions:
        fen = question.payload.get("fen") or question.payload.get("start_fen") or START_FEN
        try:
            prompt = _render(services.templates, "fen_analysis", fen=fen, question=question.prompt)
            completion = backend.complete(prompt)
            answer = extract_answer(completion.text)
            graded = grade_answer(question.expected, answer, question.grading)
            record = QuestionRecord(
                question_id=question.id,
                quality=question.quality,
                subtype=question.subtype,
                raw_completion=completion.text,
                extracted_answer=answer,
                score=graded.score,
                flags=graded.flags,
            )
        except LlmError as exc:
            record = _service_failure(question, exc)
        records.append(record)
        emit(record)
        sums[question.subtype] += record.score
    aggregate = perception_score(
        sums["fen-position"], sums["capture-count"], sums["piece-status"], len(records)
    )
    return QualityRun("perception", tuple(records), aggregate)


# --------------------------------------------------------- memory / attention


def _grade_routed(question: Question, record) -> GradeResult:
    """Grade a router answer, honouring the off-domain no-context rule."""
    if question.grading == "chunk-id-match":
        return grade_answer(question.expected, record.answer, "chunk-id-match", chunk_ids=record.chunk_ids)
    graded = grade_answer(question.expected, record.answer, question.grading)
    if question.subtype == "off-domain" and "no-context" in record.flags:
        flagged = grade_answer(question.expected, NO_CONTEXT_SENTINEL, question.grading)
        if flagged.score > graded.score:
            return GradeResult(flagged.score, flagged.flags + ("graded-via-no-context-flag",))
    return graded


def _run_routed(quality: str, questions: Sequence[Question], backend, services: Services, emit) -> QualityRun:
    router = Router(
        backend,
        analyzer=services.analyzer,
        store=services.store,
        engine=services.engine,
        templates=dict(services.templates),
        search_k=services.search_k,
    )
    records = []
    for question in questions:
        try:
            for note in question.payload.get("updates", ()):
                router.answer(f"{UPDATE_PREFIX} {note}")
            routed = router.answer(question.prompt)
            graded = _grade_routed(question, routed)
            record = QuestionRecord(
                question_id=question.id,
                quality=question.quality,
                subtype=question.subtype,
                raw_completion=routed.answer,
                extracted_answer=routed.answer,
                score=graded.score,
                chunk_ids=routed.chunk_ids,
                flags=graded.flags + routed.flags,
            )
        except (RouterError, LlmError, StoreError) as exc:
            record = _service_failure(question, exc)
        records.append(record)
        emit(record)
    aggregate = exact_match_score(sum(r.score for r in records), len(records))
    return QualityRun(quality, tuple(records), aggregate)


# ----------------------------------------------------- reasoning / anticipation


def _solver_moves(puzzle: Puzzle) -> Tuple[str, ...]:
    return tuple(puzzle.solution[::2])


def _attempt_steps(puzzle: Puzzle, moves_played: Sequence[str]):
    """Rebuild (move_index, fen_before, san) for each system move of an
    attempt, replaying the same game the engine session played."""
    state = parse_fen(puzzle.fen)
    step = 0
    steps = []
    for index, uci in enumerate(moves_played, start=1):
        fen_before = state.fen()
        state, move = apply_uci(state, uci)
        steps.append((index, fen_before, move.san))
        if step >= len(puzzle.solution) or uci != puzzle.solution[step]:
            break
        if is_checkmate(state):
            break
        step += 1
        if step >= len(puzzle.solution):
            break
        state, _ = apply_uci(state, puzzle.solution[step])
        step += 1
    return steps


def _puzzle_for(question: Question, services: Services) -> Puzzle:
    pid = question.payload.get("puzzle_id")
    puzzle = services.puzzles.get(pid)
    if puzzle is None:
        raise RunnerError(f"question {question.id!r} references unknown puzzle {pid!r}")
    return puzzle


def _run_reasoning(questions: Sequence[Question], backend, services: Services, emit) -> QualityRun:
    if services.engine is None:
        raise RunnerError("reasoning needs an engine session")
    records = []
    tasks = []
    runs = {}
    for question in questions:
        puzzle = _puzzle_for(question, services)
        try:
            attempt = services.engine.solve_puzzle(puzzle)
            question_tasks = []
            for index, fen_before, san in _attempt_steps(puzzle, attempt.moves_played):
                prompt = _render(services.templates, "reasoning_explain", fen=fen_before, san=san)
                explanation = backend.complete(prompt).text
                question_tasks.append(
                    AnnotationTask(
                        task_id=f"{puzzle.id}-m{index}",
                        puzzle_id=puzzle.id,
                        move_index=index,
                        fen_before=fen_before,
                        engine_move=san,
                        explanation=explanation,
                    )
                )
            tasks.extend(question_tasks)
            runs[puzzle.id] = attempt.n_sys
            record = QuestionRecord(
                question_id=question.id,
                quality=question.quality,
                subtype=question.subtype,
                extracted_answer=" ".join(attempt.moves_played),
                score=None,
                flags=("solved",) if attempt.solved else (),
                n_sys=attempt.n_sys,
                task_ids=tuple(t.task_id for t in question_tasks),
            )
            records.append(record)
            emit(record)
        except (EngineError, ChessError, LlmError) as exc:
            record = _service_failure(question, exc)
            records.append(record)
            emit(record)
    aggregate = None if tasks else 0.0
    return QualityRun("reasoning", tuple(records), aggregate, tuple(tasks), runs)


def _run_anticipation(questions: Sequence[Question], backend, services: Services, emit) -> QualityRun:
    if services.engine is None:
        raise RunnerError("anticipation needs an engine session")
    records = []
    inputs = []
    for question in questions:
        puzzle = _puzzle_for(question, services)
        try:
            attempt = services.engine.solve_puzzle(puzzle)
            matched = match_prefix(attempt.moves_played, _solver_moves(puzzle))
            entry = AnticipationInput(
                puzzle_id=puzzle.id,
                matched=matched,
                system_moves=attempt.n_sys,
                solution_len=puzzle.solution_len,
            )
            record = QuestionRecord(
                question_id=question.id,
                quality=question.quality,
                subtype=question.subtype,
                extracted_answer=" ".join(attempt.moves_played),
                score=min(matched / attempt.n_sys, 1.0),
                flags=("solved",) if attempt.solved else (),
                matched=matched,
                n_sys=attempt.n_sys,
            )
            records.append(record)
            emit(record)
        except (EngineError, ChessError) as exc:
            entry = AnticipationInput(puzzle_id=puzzle.id, matched=0, system_moves=1)
            record = replace(_service_failure(question, exc), matched=0, n_sys=1)
            records.append(record)
            emit(record)
        inputs.append(entry)
    return QualityRun("anticipation", tuple(records), anticipation_score(inputs))


# ------------------------------------------------------------------- dispatch


def run_quality(
    quality: str,
    questions: Sequence[Question],
    backend,
    services: Services,
    on_record=None,
) -> QualityRun:
    """Run every question of one quality; returns rows plus the aggregate.

    ``on_record`` is called with each record the moment its question
    finishes, so callers can persist progress before the quality completes."""
    _check_questions(quality, questions)
    emit = on_record if on_record is not None else (lambda record: None)
    if quality == "perception":
        return _run_perception(questions, backend, services, emit)
    if quality in ("memory", "attention"):
        return _run_routed(quality, questions, backend, services, emit)
    if quality == "reasoning":
        return _run_reasoning(questions, backend, services, emit)
    return _run_anticipation(questions, backend, services, emit)
