"""Task-specific answer verification.

Each task maps to exactly one scoring route:

* math reasoning: tag extraction, normalization, string match, then
  symbolic equivalence;
* text-to-SQL: execution accuracy with cell-level partial credit;
* sentiment: tag extraction and case-folded label equality;
* translation: unigram-overlap metric (graded, no pass threshold).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..errors import ExtractionFailed
from ..types import Sample, TaskKind
from .latexnorm import normalize_latex, load_word_list, DEFAULT_UNIT_WORDS
from .meteor import meteor, alignment_stats, tokenize, suffix_stemmer, load_synonym_table, MeteorStats
from .sqlexec import ResultTable, execute_sql, score_sql, partial_credit, exact_match
from .symbolic import symbolic_equivalent

__all__ = [
    "VerdictMethod",
    "VerdictRecord",
    "extract_tagged",
    "normalize_latex",
    "load_word_list",
    "DEFAULT_UNIT_WORDS",
    "symbolic_equivalent",
    "score_math",
    "score_sentiment",
    "score_translation",
    "score_answer",
    "ResultTable",
    "execute_sql",
    "score_sql",
    "partial_credit",
    "exact_match",
    "meteor",
    "alignment_stats",
    "MeteorStats",
    "tokenize",
    "suffix_stemmer",
    "load_synonym_table",
    "ANSWER_TAGS",
]


class VerdictMethod(str, Enum):
    STRING_MATCH = "string_match"
    SYMBOLIC_EQUIV = "symbolic_equiv"
    EXEC_MATCH = "exec_match"
    PARTIAL_CREDIT = "partial_credit"
    TAG_MATCH = "tag_match"
    METEOR = "meteor"
    EXTRACTION_FAILED = "extraction_failed"


@dataclass(frozen=True)
class VerdictRecord:
    """Outcome of scoring one answer: graded score plus a binary pass flag.

    ``passed`` compares the score against a threshold of 1.0; for
    translation the flag is retained for structural uniformity but the
    graded score is the meaningful quantity.
    """

    score: float
    passed: bool
    method: VerdictMethod
    detail: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must lie in [0, 1]")
        if self.method is VerdictMethod.EXTRACTION_FAILED and self.score != 0.0:
            raise ValueError("extraction failures always score 0")

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "passed": self.passed,
            "method": self.method.value,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d) -> "VerdictRecord":
        return cls(
            score=float(d["score"]),
            passed=bool(d["passed"]),
            method=VerdictMethod(d["method"]),
            detail=d.get("detail", ""),
        )


def extract_tagged(text: str, tag: str) -> str:
    """Content of the last well-formed <tag>...</tag> pair, trimmed."""
    pattern = re.compile(rf"<{re.escape(tag)}>(.*?)</{re.escape(tag)}>", re.DOTALL)
    matches = pattern.findall(text)
    if not matches:
        raise ExtractionFailed(f"no <{tag}>...</{tag}> pair in response")
    return matches[-1].strip()


# Tag each task's responses are expected to carry, mirroring the prompts.
ANSWER_TAGS = {
    TaskKind.TRANSLATION: "translation",
    TaskKind.MATH_REASONING: "answer",
    TaskKind.TEXT_TO_SQL: "SQL",
    TaskKind.SENTIMENT: "sentiment",
}


def _extraction_verdict(exc: ExtractionFailed) -> VerdictRecord:
    return VerdictRecord(0.0, False, VerdictMethod.EXTRACTION_FAILED, str(exc))


def score_math(response_text: str, gold: str, *, seed: Optional[int] = None) -> VerdictRecord:
    """String match on normalized forms first, symbolic equivalence second."""
    try:
        answer = extract_tagged(response_text, ANSWER_TAGS[TaskKind.MATH_REASONING])
    except ExtractionFailed as exc:
        return _extraction_verdict(exc)
    norm_answer = normalize_latex(answer)
    norm_gold = normalize_latex(gold)
    if norm_answer == norm_gold:
        return VerdictRecord(1.0, True, VerdictMethod.STRING_MATCH, "normalized strings equal")
    kwargs = {} if seed is None else {"seed": seed}
    if symbolic_equivalent(norm_answer, norm_gold, **kwargs):
        return VerdictRecord(1.0, True, VerdictMethod.SYMBOLIC_EQUIV, "expressions agree at every probe")
    return VerdictRecord(
        0.0, False, VerdictMethod.SYMBOLIC_EQUIV,
        f"{norm_answer!r} not equivalent to {norm_gold!r}",
    )


def score_sentiment(response_text: str, gold: str) -> VerdictRecord:
    try:
        label = extract_tagged(response_text, ANSWER_TAGS[TaskKind.SENTIMENT])
    except ExtractionFailed as exc:
        return _extraction_verdict(exc)
    hit = label.strip().lower() == gold.strip().lower()
    return VerdictRecord(
        1.0 if hit else 0.0, hit, VerdictMethod.TAG_MATCH,
        f"predicted {label.strip().lower()!r}, gold {gold.strip().lower()!r}",
    )


def score_translation(response_text: str, gold: str) -> VerdictRecord:
    try:
        candidate = extract_tagged(response_text, ANSWER_TAGS[TaskKind.TRANSLATION])
    except ExtractionFailed as exc:
        return _extraction_verdict(exc)
    value = meteor(candidate, gold)
    return VerdictRecord(value, value >= 1.0, VerdictMethod.METEOR, f"meteor {value:.6f}")


def score_text_to_sql(response_text: str, gold: str, db_path) -> VerdictRecord:
    try:
        pred_sql = extract_tagged(response_text, ANSWER_TAGS[TaskKind.TEXT_TO_SQL])
    except ExtractionFailed as exc:
        return _extraction_verdict(exc)
    score, method, detail = score_sql(pred_sql, gold, db_path)
    return VerdictRecord(score, score >= 1.0, VerdictMethod(method), detail)


def score_answer(sample: Sample, response_text: str, *, seed: Optional[int] = None) -> VerdictRecord:
    """Dispatch to the task's scoring route."""
    if sample.task is TaskKind.MATH_REASONING:
        return score_math(response_text, sample.gold, seed=seed)
    if sample.task is TaskKind.SENTIMENT:
        return score_sentiment(response_text, sample.gold)
    if sample.task is TaskKind.TRANSLATION:
        return score_translation(response_text, sample.gold)
    if sample.task is TaskKind.TEXT_TO_SQL:
        return score_text_to_sql(response_text, sample.gold, sample.payload["db_path"])
    raise ValueError(f"unknown task {sample.task!r}")
