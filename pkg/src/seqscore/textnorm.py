"""Answer-text normalization shared by clustering and F1 scoring.

Rules: lowercase, strip punctuation, drop the articles a/an/the, collapse
whitespace. Applied in that order.
"""

from __future__ import annotations

import re
import string

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    text = text.lower().translate(_PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())
