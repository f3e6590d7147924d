"""Reflection loop execution and trace persistence.

A run over one sample produces a SampleTrace: one RoundSnapshot per
completed round, each holding the exact prompt sent, the model's reply,
and whatever feedback preceded the round. Transcripts are prefix-stable
by construction: every round replays all earlier turns unchanged and
appends exactly one user and one assistant message.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from .errors import ParseError, ProviderError
from .feedback import FeedbackResult, judge_feedback, sql_execution_feedback
from .prompts import PromptLibrary, build_reflection_prompt
from .providers import GenerationParams, ModelResponse, Provider
from .types import (
    FeedbackKind,
    Message,
    Role,
    Sample,
    StrategyConfig,
    TokenUsage,
    ZERO_USAGE,
    validate_strategy,
)
from .verifiers import VerdictRecord, score_answer

TRACE_VERSION = 1

BUDGET_HEADROOM_TOKENS = 1024


def apply_budget(params: GenerationParams, thinking_budget: Optional[int]) -> GenerationParams:
    """Grant the thinking budget without squeezing the visible answer."""
    if thinking_budget is None:
        return params
    max_tokens = max(params.max_tokens, thinking_budget + BUDGET_HEADROOM_TOKENS)
    return replace(params, thinking_budget=thinking_budget, max_tokens=max_tokens)


@dataclass(frozen=True)
class RoundSnapshot:
    round_index: int
    prompt_text: str
    response: ModelResponse
    feedback_text: Optional[str] = None
    feedback_latency_s: float = 0.0
    feedback_usage: TokenUsage = field(default_factory=lambda: ZERO_USAGE)
    verdict: Optional[VerdictRecord] = None

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "prompt_text": self.prompt_text,
            "response": self.response.to_dict(),
            "feedback_text": self.feedback_text,
            "feedback_latency_s": self.feedback_latency_s,
            "feedback_usage": self.feedback_usage.to_dict(),
            "verdict": self.verdict.to_dict() if self.verdict is not None else None,
        }

    @classmethod
    def from_dict(cls, d) -> "RoundSnapshot":
        return cls(
            round_index=d["round_index"],
            prompt_text=d["prompt_text"],
            response=ModelResponse.from_dict(d["response"]),
            feedback_text=d.get("feedback_text"),
            feedback_latency_s=d.get("feedback_latency_s", 0.0),
            feedback_usage=TokenUsage.from_dict(d.get("feedback_usage") or {}),
            verdict=VerdictRecord.from_dict(d["verdict"]) if d.get("verdict") else None,
        )


@dataclass(frozen=True)
class SampleTrace:
    sample_id: str
    strategy: StrategyConfig
    snapshots: tuple[RoundSnapshot, ...]
    total_latency_s: float
    total_usage: TokenUsage
    estimated_usage_flag: bool = False
    abort_reason: Optional[str] = None

    @property
    def final_response_text(self) -> Optional[str]:
        return self.snapshots[-1].response.text if self.snapshots else None

    @property
    def final_verdict(self) -> Optional[VerdictRecord]:
        return self.snapshots[-1].verdict if self.snapshots else None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "strategy": self.strategy.to_dict(),
            "snapshots": [s.to_dict() for s in self.snapshots],
            "total_latency_s": self.total_latency_s,
            "total_usage": self.total_usage.to_dict(),
            "estimated_usage_flag": self.estimated_usage_flag,
            "abort_reason": self.abort_reason,
        }

    @classmethod
    def from_dict(cls, d) -> "SampleTrace":
        return cls(
            sample_id=d["sample_id"],
            strategy=StrategyConfig.from_dict(d["strategy"]),
            snapshots=tuple(RoundSnapshot.from_dict(s) for s in d["snapshots"]),
            total_latency_s=d["total_latency_s"],
            total_usage=TokenUsage.from_dict(d["total_usage"]),
            estimated_usage_flag=d.get("estimated_usage_flag", False),
            abort_reason=d.get("abort_reason"),
        )


def _assistant_message(text: str, *, checkpoint: bool) -> Message:
    return Message(Role.ASSISTANT, text, cache_checkpoint=checkpoint)


def _gather_feedback(
    strategy: StrategyConfig,
    sample: Sample,
    question: str,
    last_answer: str,
    judge_provider: Optional[Provider],
    library: Optional[PromptLibrary],
) -> Optional[FeedbackResult]:
    if strategy.feedback is FeedbackKind.NONE:
        return None
    if strategy.feedback is FeedbackKind.LLM_JUDGE:
        if judge_provider is None:
            raise ValueError("llm_judge feedback requires a judge_provider")
        return judge_feedback(judge_provider, question, last_answer, library=library)
    return sql_execution_feedback(sample, last_answer)


def run_sample(
    provider: Provider,
    sample: Sample,
    strategy: StrategyConfig,
    *,
    judge_provider: Optional[Provider] = None,
    params: Optional[GenerationParams] = None,
    library: Optional[PromptLibrary] = None,
) -> SampleTrace:
    """Execute the full reflection loop for one sample.

    Provider failures anywhere in the loop (including judge calls) end
    the run early: the trace keeps every completed round and records the
    failure in ``abort_reason`` instead of raising.
    """
    validate_strategy(strategy, sample.task)
    lib = library or PromptLibrary()
    gen_params = apply_budget(params or GenerationParams(), strategy.thinking_budget)

    snapshots: list[RoundSnapshot] = []
    transcript: list[Message] = []
    total_latency = 0.0
    total_usage = ZERO_USAGE
    estimated = False
    abort_reason: Optional[str] = None

    initial = lib.initial_prompt(sample)
    question = initial.content
    transcript.append(initial)

    try:
        response = provider.complete(transcript, gen_params)
    except ProviderError as exc:
        return SampleTrace(
            sample_id=sample.id,
            strategy=strategy,
            snapshots=(),
            total_latency_s=0.0,
            total_usage=ZERO_USAGE,
            abort_reason=f"{type(exc).__name__}: {exc}",
        )

    snapshots.append(RoundSnapshot(0, question, response))
    transcript.append(
        _assistant_message(response.text, checkpoint=strategy.caching_enabled)
    )
    total_latency += response.latency_s
    total_usage += response.usage
    estimated |= response.usage_estimated

    for round_index in range(1, strategy.reflection_rounds + 1):
        last_answer = snapshots[-1].response.text
        try:
            feedback = _gather_feedback(
                strategy, sample, question, last_answer, judge_provider, lib
            )
        except ProviderError as exc:
            abort_reason = f"{type(exc).__name__}: {exc}"
            break
        feedback_text = feedback.text if feedback is not None else None
        if feedback is not None:
            total_latency += feedback.latency_s
            total_usage += feedback.usage

        prompt = build_reflection_prompt(question, feedback_text, lib)
        transcript.append(prompt)
        try:
            response = provider.complete(transcript, gen_params)
        except ProviderError as exc:
            abort_reason = f"{type(exc).__name__}: {exc}"
            break
        snapshots.append(
            RoundSnapshot(
                round_index=round_index,
                prompt_text=prompt.content,
                response=response,
                feedback_text=feedback_text,
                feedback_latency_s=feedback.latency_s if feedback else 0.0,
                feedback_usage=feedback.usage if feedback else ZERO_USAGE,
            )
        )
        transcript.append(
            _assistant_message(response.text, checkpoint=strategy.caching_enabled)
        )
        total_latency += response.latency_s
        total_usage += response.usage
        estimated |= response.usage_estimated

    return SampleTrace(
        sample_id=sample.id,
        strategy=strategy,
        snapshots=tuple(snapshots),
        total_latency_s=total_latency,
        total_usage=total_usage,
        estimated_usage_flag=estimated,
        abort_reason=abort_reason,
    )


def attach_verdicts(trace: SampleTrace, sample: Sample, *, seed: Optional[int] = None) -> SampleTrace:
    """Score every round's answer and return the annotated trace."""
    if sample.id != trace.sample_id:
        raise ValueError(f"trace is for {trace.sample_id!r}, not {sample.id!r}")
    scored = tuple(
        replace(snap, verdict=score_answer(sample, snap.response.text, seed=seed))
        for snap in trace.snapshots
    )
    return replace(trace, snapshots=scored)


# ---------------------------------------------------------------------------
# Trace persistence (JSONL, one trace per line, header first)


def trace_key(trace: SampleTrace) -> tuple[str, str, str]:
    """Identity used for resume: one trace per (sample, model, strategy)."""
    return (trace.sample_id, trace.strategy.model_id, trace.strategy.label())


class TraceWriter:
    """Appends traces to a JSONL file, writing the header line first.

    The header carries run metadata (timestamp, seed) and is the only
    line that may differ between two runs of the same seed; comparisons
    for reproducibility should skip it.
    """

    def __init__(self, path: Path | str, *, seed: Optional[int] = None, append: bool = False, **meta):
        self.path = Path(path)
        mode = "a" if append and self.path.exists() and self.path.stat().st_size > 0 else "w"
        self._fh = open(self.path, mode, encoding="utf-8")
        if mode == "w":
            header = {
                "kind": "header",
                "trace_version": TRACE_VERSION,
                "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
                "seed": seed,
            }
            header.update(meta)
            self._fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
            self._fh.flush()

    def write(self, trace: SampleTrace) -> None:
        self._fh.write(json.dumps(trace.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_traces(
    path: Path | str,
    traces: Iterable[SampleTrace],
    *,
    seed: Optional[int] = None,
    **meta,
) -> None:
    with TraceWriter(path, seed=seed, **meta) as writer:
        for trace in traces:
            writer.write(trace)


def read_traces(path: Path | str) -> tuple[dict, list[SampleTrace]]:
    """Load a trace file, returning (header, traces).

    Files written before a crash may lack the header; those load with an
    empty header so a resumed run can still pick up completed work.
    """
    header: dict = {}
    traces: list[SampleTrace] = []
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), lineno, f"invalid JSON: {exc}") from None
            if obj.get("kind") == "header":
                if obj.get("trace_version") != TRACE_VERSION:
                    raise ParseError(
                        str(path), lineno,
                        f"trace_version {obj.get('trace_version')!r} not supported",
                    )
                header = obj
                continue
            try:
                traces.append(SampleTrace.from_dict(obj))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(str(path), lineno, f"bad trace record: {exc}") from None
    return header, traces


def completed_keys(path: Path | str) -> set[tuple[str, str, str]]:
    """Keys of traces already present in a file, for resume."""
    if not Path(path).exists():
        return set()
    _, traces = read_traces(path)
    return {trace_key(t) for t in traces}
