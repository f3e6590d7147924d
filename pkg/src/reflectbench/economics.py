"""Cost and latency accounting.

All money amounts are ``decimal.Decimal``: token counts times per-1k
rates divide by an exact power of ten, so every figure in a report is
exact rather than a float accumulation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .errors import EmptyInput, MissingPrice
from .types import TokenUsage

# Fallback cache-rate ratios applied when a model's pricing entry omits them.
DEFAULT_CACHE_READ_RATIO = Decimal("0.10")
DEFAULT_CACHE_WRITE_RATIO = Decimal("1.25")

_PER = Decimal(1000)


def _dec(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        # shortest-repr round trip keeps "0.003" exact instead of the binary float
        return Decimal(repr(value))
    return Decimal(value)


@dataclass(frozen=True)
class PriceEntry:
    """Per-1k-token rates for one model."""

    input_per_1k: Decimal
    output_per_1k: Decimal
    cache_read_per_1k: Decimal
    cache_write_per_1k: Decimal

    def __post_init__(self):
        for name in ("input_per_1k", "output_per_1k", "cache_read_per_1k", "cache_write_per_1k"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.cache_read_per_1k > self.input_per_1k:
            warnings.warn(
                "cache_read_per_1k exceeds input_per_1k; caching can only lose money",
                stacklevel=2,
            )

    @classmethod
    def from_rates(
        cls,
        input_per_1k,
        output_per_1k,
        cache_read_per_1k=None,
        cache_write_per_1k=None,
    ) -> "PriceEntry":
        inp = _dec(input_per_1k)
        return cls(
            input_per_1k=inp,
            output_per_1k=_dec(output_per_1k),
            cache_read_per_1k=_dec(cache_read_per_1k) if cache_read_per_1k is not None
            else inp * DEFAULT_CACHE_READ_RATIO,
            cache_write_per_1k=_dec(cache_write_per_1k) if cache_write_per_1k is not None
            else inp * DEFAULT_CACHE_WRITE_RATIO,
        )


@dataclass(frozen=True)
class PricingTable:
    """Model-id keyed price entries with a date stamp for provenance."""

    entries: Mapping[str, PriceEntry]
    as_of: Optional[str] = None

    def for_model(self, model_id: str) -> PriceEntry:
        try:
            return self.entries[model_id]
        except KeyError:
            raise MissingPrice(f"no pricing entry for model {model_id!r}") from None

    @classmethod
    def load(cls, path: Path | str) -> "PricingTable":
        raw = json.loads(Path(path).read_text(encoding="utf-8"), parse_float=Decimal)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "PricingTable":
        entries = {}
        for model_id, rates in raw.get("models", {}).items():
            entries[model_id] = PriceEntry.from_rates(
                rates["input_per_1k"],
                rates["output_per_1k"],
                rates.get("cache_read_per_1k"),
                rates.get("cache_write_per_1k"),
            )
        return cls(entries=entries, as_of=raw.get("as_of"))


@dataclass(frozen=True)
class CostBreakdown:
    input_cost: Decimal = Decimal(0)
    output_cost: Decimal = Decimal(0)
    cache_read_cost: Decimal = Decimal(0)
    cache_write_cost: Decimal = Decimal(0)

    @property
    def total(self) -> Decimal:
        return self.input_cost + self.output_cost + self.cache_read_cost + self.cache_write_cost

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(
            self.input_cost + other.input_cost,
            self.output_cost + other.output_cost,
            self.cache_read_cost + other.cache_read_cost,
            self.cache_write_cost + other.cache_write_cost,
        )

    def to_dict(self) -> dict:
        return {
            "input_cost": str(self.input_cost),
            "output_cost": str(self.output_cost),
            "cache_read_cost": str(self.cache_read_cost),
            "cache_write_cost": str(self.cache_write_cost),
            "total": str(self.total),
        }


def run_cost(usage: TokenUsage, price: PriceEntry) -> CostBreakdown:
    """Bill token usage at the given rates, exactly."""
    return CostBreakdown(
        input_cost=Decimal(usage.input_tokens) * price.input_per_1k / _PER,
        output_cost=Decimal(usage.output_tokens) * price.output_per_1k / _PER,
        cache_read_cost=Decimal(usage.cache_read_tokens) * price.cache_read_per_1k / _PER,
        cache_write_cost=Decimal(usage.cache_write_tokens) * price.cache_write_per_1k / _PER,
    )


# ---------------------------------------------------------------------------
# Counterfactual caching model
#
# A reflection conversation replays its whole transcript every round.
# With caching, the request at round r reads the previously checkpointed
# prefix (everything up to the last assistant turn) at the cache-read
# rate and writes the newly appended user turn at the cache-write rate;
# assistant output enters the cache as a generation by-product. Round 0
# therefore pays a pure write premium on the initial prompt, which is
# why savings start at or below zero and grow as reuse accumulates.


def caching_costs_from_profile(
    profile: Sequence[tuple[int, int]],
    price: PriceEntry,
) -> tuple[CostBreakdown, CostBreakdown, float]:
    """Cost of a round profile billed without and with prompt caching.

    ``profile`` holds one (full_input_tokens, output_tokens) pair per
    round, where full_input counts every token the model read that
    round. Returns (uncached, cached, savings_fraction).
    """
    uncached = CostBreakdown()
    cached = CostBreakdown()
    prev_full = prev_out = None
    for full_input, out_tokens in profile:
        if prev_full is None:
            new_prompt = full_input
        else:
            new_prompt = full_input - prev_full - prev_out
            if new_prompt < 0:
                raise ValueError("round profile shrinks: transcripts must only grow")
        reused = full_input - new_prompt
        uncached += CostBreakdown(
            input_cost=Decimal(full_input) * price.input_per_1k / _PER,
            output_cost=Decimal(out_tokens) * price.output_per_1k / _PER,
        )
        cached += CostBreakdown(
            output_cost=Decimal(out_tokens) * price.output_per_1k / _PER,
            cache_read_cost=Decimal(reused) * price.cache_read_per_1k / _PER,
            cache_write_cost=Decimal(new_prompt) * price.cache_write_per_1k / _PER,
        )
        prev_full, prev_out = full_input, out_tokens
    if uncached.total == 0:
        return uncached, cached, 0.0
    savings = 1 - cached.total / uncached.total
    return uncached, cached, float(savings)


def round_profile(trace) -> list[tuple[int, int]]:
    """Extract (full_input_tokens, output_tokens) per round from a trace."""
    return [
        (snap.response.usage.total_input_tokens, snap.response.usage.output_tokens)
        for snap in trace.snapshots
    ]


def caching_cost_model(trace, price: PriceEntry) -> tuple[CostBreakdown, CostBreakdown, float]:
    """What the trace's conversation would cost without and with caching.

    Works on any trace with prefix-stable transcripts, whether or not it
    actually ran with caching: billed cache tokens are folded back into
    the full per-round input counts first. Feedback calls are separate
    conversations with no reusable prefix and are out of scope here.
    """
    return caching_costs_from_profile(round_profile(trace), price)


def synthetic_round_profile(
    prefix_tokens: int,
    rounds: int,
    *,
    prompt_tokens_per_round: int = 120,
    output_tokens_per_round: int = 80,
) -> list[tuple[int, int]]:
    """Round profile for a hypothetical conversation, for what-if studies."""
    profile = []
    full = prefix_tokens
    out = output_tokens_per_round
    profile.append((full, out))
    for _ in range(rounds):
        full = full + out + prompt_tokens_per_round
        profile.append((full, out))
    return profile


# ---------------------------------------------------------------------------
# Latency aggregation


@dataclass(frozen=True)
class LatencySummary:
    mean: float
    p50: float
    p95: float
    count: int


def _nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def aggregate_latency(traces_or_latencies: Sequence) -> LatencySummary:
    """Mean and nearest-rank p50/p95 over trace latencies."""
    values = [
        t if isinstance(t, (int, float)) else t.total_latency_s
        for t in traces_or_latencies
    ]
    if not values:
        raise EmptyInput("no latencies to aggregate")
    ordered = sorted(values)
    return LatencySummary(
        mean=sum(ordered) / len(ordered),
        p50=_nearest_rank(ordered, 50.0),
        p95=_nearest_rank(ordered, 95.0),
        count=len(ordered),
    )
