"""Whitespace+punctuation tokenizer shared by corpus statistics and model encoding."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split text into word tokens and single punctuation marks.

    Case is preserved; callers that need case folding lower the text first.
    """
    return _TOKEN_RE.findall(text)
