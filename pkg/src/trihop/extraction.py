"""Answer-text normalization and sentiment polarity extraction.

Both operations are total: unparseable answers come back as a value,
never as an exception.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"


POLARITY_WORDS = tuple(p.value for p in Polarity)

_LABEL_RE = re.compile("|".join(POLARITY_WORDS), re.IGNORECASE)


@dataclass(frozen=True)
class ExtractionResult:
    """Outcome of scanning an answer for a polarity label.

    ``parseable`` is true exactly when ``polarity`` and ``matched_span``
    are present; ``matched_span`` is (offset, length) into the original,
    un-normalized answer for auditability.
    """

    polarity: Polarity | None
    parseable: bool
    matched_span: tuple[int, int] | None


def normalize_text(s: str) -> str:
    """Lowercase, replace punctuation with spaces, collapse whitespace, trim.

    Idempotent. "The Aspect is TASTE!!" -> "the aspect is taste".
    """
    lowered = s.lower()
    spaced = "".join(ch if ch.isalnum() else " " for ch in lowered)
    return " ".join(spaced.split())


def extract_polarity(answer: str) -> ExtractionResult:
    """Find the last whole-word polarity keyword in ``answer``.

    Keywords are matched case-insensitively with non-alphanumeric
    boundaries, so "positively" never matches "positive". The LAST
    occurrence wins: generated rationales typically end with the verdict.
    """
    last = None
    for match in _LABEL_RE.finditer(answer):
        start, end = match.start(), match.end()
        before_ok = start == 0 or not answer[start - 1].isalnum()
        after_ok = end == len(answer) or not answer[end].isalnum()
        if before_ok and after_ok:
            last = match
    if last is None:
        return ExtractionResult(polarity=None, parseable=False, matched_span=None)
    return ExtractionResult(
        polarity=Polarity(last.group().lower()),
        parseable=True,
        matched_span=(last.start(), last.end() - last.start()),
    )
