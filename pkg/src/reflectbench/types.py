"""Core domain types: tasks, samples, messages, strategies, token usage."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .errors import ValidationError


class TaskKind(str, Enum):
    TRANSLATION = "translation"
    MATH_REASONING = "math_reasoning"
    TEXT_TO_SQL = "text_to_sql"
    SENTIMENT = "sentiment"


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class FeedbackKind(str, Enum):
    NONE = "none"
    LLM_JUDGE = "llm_judge"
    SQL_EXECUTION = "sql_execution"


# Payload fields each task requires before a prompt can be built.
REQUIRED_FIELDS: Mapping[TaskKind, tuple[str, ...]] = {
    TaskKind.TRANSLATION: ("source", "target_language"),
    TaskKind.MATH_REASONING: ("problem",),
    TaskKind.TEXT_TO_SQL: ("question", "schema_ddl", "db_path"),
    TaskKind.SENTIMENT: ("review",),
}


@dataclass(frozen=True)
class Message:
    """One turn of a conversation transcript.

    ``cache_checkpoint`` marks the message as the end of a cacheable
    prefix for providers that support prompt caching.
    """

    role: Role
    content: str
    cache_checkpoint: bool = False

    def __post_init__(self):
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class Sample:
    """A single benchmark example: task-specific payload plus gold answer."""

    id: str
    task: TaskKind
    payload: Mapping[str, str] = field(default_factory=dict)
    gold: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("sample id must be non-empty")


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0
    cache_read_tokens: int = 0
    cache_write_tokens: int = 0

    def __post_init__(self):
        for name in ("input_tokens", "output_tokens", "cache_read_tokens", "cache_write_tokens"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
            self.cache_read_tokens + other.cache_read_tokens,
            self.cache_write_tokens + other.cache_write_tokens,
        )

    @property
    def total_input_tokens(self) -> int:
        """All tokens the model read, regardless of how they were billed."""
        return self.input_tokens + self.cache_read_tokens + self.cache_write_tokens

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cache_read_tokens": self.cache_read_tokens,
            "cache_write_tokens": self.cache_write_tokens,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TokenUsage":
        return cls(
            int(d.get("input_tokens", 0)),
            int(d.get("output_tokens", 0)),
            int(d.get("cache_read_tokens", 0)),
            int(d.get("cache_write_tokens", 0)),
        )


ZERO_USAGE = TokenUsage()


@dataclass(frozen=True)
class StrategyConfig:
    """One inference-time configuration of the benchmark grid."""

    model_id: str
    reflection_rounds: int = 0
    feedback: FeedbackKind = FeedbackKind.NONE
    thinking_budget: Optional[int] = None
    judge_model_id: Optional[str] = None
    caching_enabled: bool = False

    def label(self) -> str:
        """Short human-readable key used in trace files and reports."""
        parts = [f"refl{self.reflection_rounds}"]
        if self.feedback is not FeedbackKind.NONE:
            parts.append(self.feedback.value)
        if self.thinking_budget is not None:
            parts.append(f"budget{self.thinking_budget}")
        if self.caching_enabled:
            parts.append("cache")
        return "+".join(parts)

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "reflection_rounds": self.reflection_rounds,
            "feedback": self.feedback.value,
            "thinking_budget": self.thinking_budget,
            "judge_model_id": self.judge_model_id,
            "caching_enabled": self.caching_enabled,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StrategyConfig":
        return cls(
            model_id=d["model_id"],
            reflection_rounds=int(d.get("reflection_rounds", 0)),
            feedback=FeedbackKind(d.get("feedback", "none")),
            thinking_budget=d.get("thinking_budget"),
            judge_model_id=d.get("judge_model_id"),
            caching_enabled=bool(d.get("caching_enabled", False)),
        )


# Reflection-round counts allowed when strict grid parity is requested.
STRICT_GRID_ROUNDS = (0, 1, 3)


def validate_strategy(strategy: StrategyConfig, task: TaskKind, *, strict_grid: bool = False) -> None:
    """Check every strategy invariant; raise ValidationError listing all violations.

    ``strict_grid`` additionally restricts reflection rounds to
    ``STRICT_GRID_ROUNDS`` and forbids combining a thinking budget with
    reflection, matching the published comparison grid.
    """
    violations = []
    if not strategy.model_id:
        violations.append("model_id must be non-empty")
    if strategy.reflection_rounds < 0:
        violations.append("reflection_rounds must be >= 0")
    if strategy.thinking_budget is not None and strategy.thinking_budget <= 0:
        violations.append("thinking_budget must be positive when set")
    if strategy.feedback is FeedbackKind.SQL_EXECUTION and task is not TaskKind.TEXT_TO_SQL:
        violations.append(
            f"sql_execution feedback requires a {TaskKind.TEXT_TO_SQL.value} task, got {task.value}"
        )
    if strategy.feedback is FeedbackKind.LLM_JUDGE and not strategy.judge_model_id:
        violations.append("judge_model_id is required when feedback is llm_judge")
    if strategy.feedback is not FeedbackKind.LLM_JUDGE and strategy.judge_model_id:
        violations.append("judge_model_id is only meaningful with llm_judge feedback")
    if strict_grid:
        if strategy.reflection_rounds not in STRICT_GRID_ROUNDS:
            violations.append(
                f"strict grid mode allows reflection_rounds in {STRICT_GRID_ROUNDS}, "
                f"got {strategy.reflection_rounds}"
            )
        if strategy.thinking_budget is not None and strategy.reflection_rounds > 0:
            violations.append(
                "strict grid mode forbids combining thinking_budget with reflection rounds"
            )
    if violations:
        raise ValidationError(violations)
