"""Label-word extraction, matching the engine that produced the training
file: the LAST whole-word occurrence of a polarity word wins, matched
case-insensitively with non-alphanumeric boundaries. Reimplemented here
so this package stays importable without the engine installed.
"""
import re

LABEL_WORDS = ("positive", "neutral", "negative")

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")


def last_label_word(text: str) -> str | None:
    """Return the last polarity word in ``text``, or None.

    Tokenizing on non-alphanumerics gives the same boundary behavior as
    the engine's rule: "positively" is one token and never matches,
    "positive." matches, and of several occurrences the last one wins.
    """
    found = None
    for token in _TOKEN_RE.finditer(text):
        word = token.group().lower()
        if word in LABEL_WORDS:
            found = word
    return found
