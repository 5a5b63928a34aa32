"""Answer grading for evaluation questions.

Four modes, selected per question:

- ``exact``          — string equality against any member of the key set.
- ``normalized``     — equality after case-folding, whitespace collapse,
                       terminal-punctuation stripping and leading-article
                       removal, against any member of the key set.
- ``capture-eq1``    — parse the first integer in the answer and grade its
                       closeness to the true capture count; an answer with
                       no integer scores 0 and is flagged.
- ``chunk-id-match`` — 1 iff any retrieved chunk id is in the key set.

Every mode returns a score in [0, 1] plus diagnostic flags; grading never
raises on a bad *answer*, only on a malformed *key* or unknown mode.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

from ..scoring import capture_score

GRADING_MODES = ("exact", "normalized", "capture-eq1", "chunk-id-match")

#: Sentinel answer a runner substitutes when the system explicitly flags
#: that it had no relevant context; off-domain keys may list it as an
#: acceptable outcome.
NO_CONTEXT_SENTINEL = "__no_context__"

_TERMINAL_PUNCT = ".?!,;:"
_ARTICLES = ("a ", "an ", "the ")
_FIRST_INT = re.compile(r"\d+")


class GradingError(ValueError):
    """Malformed key, unsupported mode, or key/mode shape mismatch."""


@dataclass(frozen=True)
class GradeResult:
    score: float
    flags: Tuple[str, ...] = ()


def normalize_text(text: str) -> str:
    """Case-fold, trim, collapse whitespace, strip terminal punctuation,
    and drop one leading article."""
    folded = " ".join(str(text).split()).casefold()
    folded = folded.rstrip(_TERMINAL_PUNCT).strip()
    for article in _ARTICLES:
        if folded.startswith(article):
            folded = folded[len(article):].strip()
            break
    return folded


def _key_strings(expected: Union[str, Iterable[str]], mode: str) -> Tuple[str, ...]:
    if isinstance(expected, str):
        members: Tuple[str, ...] = (expected,)
    else:
        try:
            members = tuple(expected)
        except TypeError:
            raise GradingError(f"{mode}: key must be a string or a list of strings, got {expected!r}") from None
    if not members or any(not isinstance(m, str) or not m for m in members):
        raise GradingError(f"{mode}: key must be one or more non-empty strings, got {expected!r}")
    return members


def grade_answer(
    expected,
    actual: str,
    mode: str,
    *,
    chunk_ids: Sequence[str] = (),
) -> GradeResult:
    """Grade an extracted answer against its key.

    ``expected`` is a string set for ``exact``/``normalized``, a non-negative
    integer for ``capture-eq1``, and a chunk-id set for ``chunk-id-match``
    (which grades ``chunk_ids``, ignoring ``actual``).
    """
    if mode == "exact":
        members = _key_strings(expected, mode)
        return GradeResult(1.0 if actual in members else 0.0)

    if mode == "normalized":
        members = _key_strings(expected, mode)
        wanted = {normalize_text(m) for m in members}
        return GradeResult(1.0 if normalize_text(actual) in wanted else 0.0)

    if mode == "capture-eq1":
        if isinstance(expected, bool) or not isinstance(expected, int) or expected < 0:
            raise GradingError(f"capture-eq1: key must be a non-negative integer, got {expected!r}")
        match = _FIRST_INT.search(str(actual))
        if match is None:
            return GradeResult(0.0, ("unparseable-integer",))
        return GradeResult(capture_score(expected, int(match.group())))

    if mode == "chunk-id-match":
        members = _key_strings(expected, mode)
        hit = any(cid in members for cid in chunk_ids)
        return GradeResult(1.0 if hit else 0.0)

    raise GradingError(f"unsupported grading mode {mode!r}")
