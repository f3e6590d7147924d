"""Feedback mechanisms inserted between reflection rounds.

Each mechanism produces a text block that the reflection prompt splices
into its feedback slot, plus whatever cost it incurred: a judge call
spends provider tokens and latency, local SQL execution spends neither.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ExecError, ExtractionFailed, MissingField
from .prompts import PromptLibrary, build_judge_prompt
from .providers import GenerationParams, ModelResponse, Provider
from .types import FeedbackKind, Sample, TokenUsage, ZERO_USAGE
from .verifiers import extract_tagged
from .verifiers.sqlexec import ResultTable, execute_sql

SQL_FEEDBACK_MAX_ROWS = 20


@dataclass(frozen=True)
class FeedbackResult:
    kind: FeedbackKind
    text: str
    latency_s: float = 0.0
    usage: TokenUsage = field(default_factory=lambda: ZERO_USAGE)


def judge_feedback(
    judge_provider: Provider,
    question: str,
    candidate_answer: str,
    params: GenerationParams | None = None,
    library: PromptLibrary | None = None,
) -> FeedbackResult:
    """Ask a second model to critique the answer.

    The judge sees only the original question and the candidate answer,
    never the reflection transcript, so its critique cannot anchor on
    earlier feedback.
    """
    prompt = build_judge_prompt(question, candidate_answer, library)
    response: ModelResponse = judge_provider.complete(
        [prompt], params or GenerationParams()
    )
    return FeedbackResult(
        kind=FeedbackKind.LLM_JUDGE,
        text=response.text,
        latency_s=response.latency_s,
        usage=response.usage,
    )


def _render_rows(table: ResultTable) -> str:
    lines = ["\t".join(table.columns)] if table.columns else []
    shown = table.rows[:SQL_FEEDBACK_MAX_ROWS]
    for row in shown:
        lines.append("\t".join("" if cell is None else str(cell) for cell in row))
    omitted = len(table.rows) - len(shown)
    if omitted > 0:
        lines.append(f"... ({omitted} more rows omitted)")
    return "\n".join(lines)


def sql_execution_feedback(sample: Sample, response_text: str) -> FeedbackResult:
    """Run the candidate's SQL and report what actually came back.

    Execution failures become feedback text rather than raised errors:
    a broken query is exactly the situation reflection should fix.
    Runs locally, so usage stays zero and latency is not charged.
    """
    db_path = sample.payload.get("db_path")
    if not db_path:
        raise MissingField("sql_execution feedback needs payload['db_path']")
    try:
        query = extract_tagged(response_text, "SQL")
    except ExtractionFailed:
        return FeedbackResult(
            kind=FeedbackKind.SQL_EXECUTION,
            text="No SQL statement found inside <SQL></SQL> tags in your answer.",
        )
    try:
        table = execute_sql(query, db_path)
    except ExecError as exc:
        return FeedbackResult(
            kind=FeedbackKind.SQL_EXECUTION,
            text=f"Executing your SQL failed with this error:\n{exc}",
        )
    if not table.rows:
        body = "The query executed successfully and returned no rows."
    else:
        body = (
            f"The query executed successfully and returned {len(table.rows)} row(s):\n"
            + _render_rows(table)
        )
    return FeedbackResult(kind=FeedbackKind.SQL_EXECUTION, text=body)
