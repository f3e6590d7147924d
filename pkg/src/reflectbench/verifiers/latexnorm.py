"""Deterministic normalization of answer expressions before comparison."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Collection, Optional

_UNIT_WORDS_PATH = Path(__file__).parent.parent / "resources" / "unit_words.txt"


def load_word_list(path: Path | str) -> frozenset[str]:
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line.lower())
    return frozenset(words)


DEFAULT_UNIT_WORDS = load_word_list(_UNIT_WORDS_PATH)

_TEXT_WRAPPER = re.compile(r"\\(?:text|mbox)\s*\{([^{}]*)\}")
_SINGLE_CHAR_GROUP = re.compile(r"([\^_])\{(\w)\}")


def normalize_latex(expr: str, unit_words: Optional[Collection[str]] = None) -> str:
    """Apply the fixed normalization pipeline, in order.

    Unknown commands pass through untouched; later comparison stages
    decide what to do with them.
    """
    units = DEFAULT_UNIT_WORDS if unit_words is None else frozenset(w.lower() for w in unit_words)
    s = expr

    # delimiters
    s = s.replace("\\(", "").replace("\\)", "").replace("$", "")
    # sizing commands carry no meaning for equality
    s = s.replace("\\left", "").replace("\\right", "")
    # display/text fraction variants
    s = s.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac")
    # unwrap text annotations, keeping their content for the unit pass below
    prev = None
    while prev != s:
        prev = s
        s = _TEXT_WRAPPER.sub(r"\1", s)
    # spacing commands
    s = s.replace("\\!", "").replace("\\,", "")
    # whitespace
    s = re.sub(r"\s+", " ", s).strip()
    # trailing period
    if s.endswith("."):
        s = s[:-1].rstrip()
    # degree marks and unit words
    s = re.sub(r"\^\s*(\\circ|\{\s*\\circ\s*\})", "", s).strip()
    while True:
        parts = s.rsplit(" ", 1)
        if len(parts) == 2 and parts[1].lower().rstrip(".") in units:
            s = parts[0].rstrip()
        else:
            break
    # single-character brace groups in scripts: x^{2} -> x^2
    prev = None
    while prev != s:
        prev = s
        s = _SINGLE_CHAR_GROUP.sub(r"\1\2", s)
    return s
