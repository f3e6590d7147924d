"""Benchmarking harness for inference-time self-reflection strategies.

Runs strategy grids (reflection rounds x feedback mechanism x thinking
budget) over four task domains, verifies answers, and accounts for cost
and latency, including a prompt-caching counterfactual.
"""

from __future__ import annotations

from .analysis import (
    FrontierPoint,
    TransitionMatrix,
    accuracy,
    pareto_frontier,
    relative_gain,
    transitions_from_outcomes,
    transitions_from_traces,
)
from .datasets import DatasetManifest, load_dataset
from .economics import (
    CostBreakdown,
    LatencySummary,
    PriceEntry,
    PricingTable,
    aggregate_latency,
    caching_cost_model,
    caching_costs_from_profile,
    run_cost,
    synthetic_round_profile,
)
from .engine import (
    RoundSnapshot,
    SampleTrace,
    TRACE_VERSION,
    TraceWriter,
    attach_verdicts,
    read_traces,
    run_sample,
    write_traces,
)
from .feedback import FeedbackResult, judge_feedback, sql_execution_feedback
from .prompts import PromptLibrary
from .providers import (
    GenerationParams,
    HttpProvider,
    MockProvider,
    MockRule,
    MockScript,
    ModelResponse,
    Provider,
    RecordingProvider,
    ReplayProvider,
    RetryingProvider,
    ThrottledProvider,
)
from .stats import (
    bootstrap_accuracies,
    bootstrap_ci,
    critical_difference,
    friedman_test,
    nemenyi_posthoc,
    studentized_range_quantile,
    studentized_range_sf,
    welch_t_test,
)
from .types import (
    FeedbackKind,
    Message,
    Role,
    Sample,
    StrategyConfig,
    TaskKind,
    TokenUsage,
    validate_strategy,
)
from .verifiers import VerdictMethod, VerdictRecord, score_answer

__version__ = "0.1.0"

__all__ = [
    "DatasetManifest",
    "CostBreakdown",
    "FeedbackKind",
    "FeedbackResult",
    "FrontierPoint",
    "GenerationParams",
    "HttpProvider",
    "LatencySummary",
    "Message",
    "MockProvider",
    "MockRule",
    "MockScript",
    "ModelResponse",
    "PriceEntry",
    "PricingTable",
    "PromptLibrary",
    "Provider",
    "RecordingProvider",
    "ReplayProvider",
    "RetryingProvider",
    "Role",
    "RoundSnapshot",
    "Sample",
    "SampleTrace",
    "StrategyConfig",
    "TRACE_VERSION",
    "TaskKind",
    "ThrottledProvider",
    "TokenUsage",
    "TraceWriter",
    "TransitionMatrix",
    "VerdictMethod",
    "VerdictRecord",
    "accuracy",
    "aggregate_latency",
    "attach_verdicts",
    "bootstrap_accuracies",
    "bootstrap_ci",
    "caching_cost_model",
    "caching_costs_from_profile",
    "critical_difference",
    "friedman_test",
    "judge_feedback",
    "load_dataset",
    "nemenyi_posthoc",
    "pareto_frontier",
    "read_traces",
    "relative_gain",
    "run_cost",
    "run_sample",
    "score_answer",
    "sql_execution_feedback",
    "studentized_range_quantile",
    "studentized_range_sf",
    "synthetic_round_profile",
    "transitions_from_outcomes",
    "transitions_from_traces",
    "validate_strategy",
    "welch_t_test",
    "write_traces",
]
