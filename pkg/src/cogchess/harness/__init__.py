"""Evaluation harness: dataset loading, per-quality runners, grading,
result persistence, report emission, the CLI, and the annotation API."""

from .dataset import (
    QUALITIES,
    SUBTYPES,
    Dataset,
    DatasetError,
    Document,
    EmbedderSpec,
    Question,
    load_dataset,
)
from .grading import (
    GRADING_MODES,
    NO_CONTEXT_SENTINEL,
    GradeResult,
    GradingError,
    grade_answer,
    normalize_text,
)
from .results import (
    DEFAULT_QUORUM,
    MAX_QUORUM,
    PENDING,
    RecordsLog,
    ResultsError,
    RunData,
    config_hash,
    emit_report,
    load_run,
    read_annotations,
    read_records,
    reasoning_value,
    recompute_quality,
    task_status,
    verify_run,
    write_run,
)
from .runner import (
    AnnotationTask,
    QualityRun,
    QuestionRecord,
    RunnerError,
    Services,
    run_quality,
)

__all__ = [
    "AnnotationTask",
    "Dataset",
    "DatasetError",
    "Document",
    "EmbedderSpec",
    "GradeResult",
    "GradingError",
    "GRADING_MODES",
    "DEFAULT_QUORUM",
    "MAX_QUORUM",
    "NO_CONTEXT_SENTINEL",
    "PENDING",
    "QUALITIES",
    "QualityRun",
    "Question",
    "QuestionRecord",
    "RecordsLog",
    "ResultsError",
    "RunData",
    "RunnerError",
    "SUBTYPES",
    "Services",
    "config_hash",
    "emit_report",
    "grade_answer",
    "load_dataset",
    "load_run",
    "normalize_text",
    "read_annotations",
    "read_records",
    "reasoning_value",
    "recompute_quality",
    "run_quality",
    "task_status",
    "verify_run",
    "write_run",
]
