"""Accuracy aggregation, Pareto frontiers, and reflection transitions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import EmptyInput, RaggedInput, ZeroBaseline


def _score_of(outcome) -> float:
    # graded verdicts (SQL partial credit) count fractionally, flags as 0/1
    score = getattr(outcome, "score", outcome)
    return float(score)


def accuracy(outcomes: Iterable) -> float:
    """Mean score across outcomes; accepts verdicts, bools, or floats."""
    scores = [_score_of(o) for o in outcomes]
    if not scores:
        raise EmptyInput("accuracy over zero outcomes is undefined")
    return sum(scores) / len(scores)


def relative_gain(new_value: float, baseline: float) -> float:
    """Percent improvement of new_value over baseline."""
    if baseline == 0:
        raise ZeroBaseline("relative gain is undefined for a zero baseline")
    return (new_value - baseline) / baseline * 100.0


# ---------------------------------------------------------------------------
# Pareto frontier over (quality up, latency down)


@dataclass(frozen=True)
class FrontierPoint:
    """One strategy's operating point: mean accuracy vs mean latency."""

    model_id: str
    strategy_label: str
    accuracy: float
    latency_s: float
    cost: Optional[float] = None
    family: str = "default"

    def __post_init__(self):
        if not (math.isfinite(self.accuracy) and math.isfinite(self.latency_s)):
            raise ValueError("frontier points need finite accuracy and latency")
        if not self.family:
            raise ValueError("family must be non-empty")

    def dominates(self, other: "FrontierPoint") -> bool:
        at_least = self.accuracy >= other.accuracy and self.latency_s <= other.latency_s
        strictly = self.accuracy > other.accuracy or self.latency_s < other.latency_s
        return at_least and strictly

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "strategy_label": self.strategy_label,
            "accuracy": self.accuracy,
            "latency_s": self.latency_s,
            "cost": self.cost,
            "family": self.family,
        }


def pareto_frontier(points: Sequence[FrontierPoint]) -> list[FrontierPoint]:
    """Points not dominated by any other, sorted by latency.

    A point survives unless another has at least its accuracy at no more
    latency and beats it on one axis. Exact ties on both axes do not
    dominate each other, so duplicated operating points all survive.
    """
    if not points:
        return []
    # sweep latency groups in order; a group survives only if its best
    # accuracy strictly beats everything cheaper
    by_latency: dict[float, list[FrontierPoint]] = {}
    for p in points:
        by_latency.setdefault(p.latency_s, []).append(p)
    frontier: list[FrontierPoint] = []
    best_accuracy = float("-inf")
    for latency in sorted(by_latency):
        group = by_latency[latency]
        top = max(p.accuracy for p in group)
        if top > best_accuracy:
            frontier.extend(p for p in group if p.accuracy == top)
            best_accuracy = top
    return frontier


# ---------------------------------------------------------------------------
# Round-to-round transitions


@dataclass(frozen=True)
class BoundaryCounts:
    """Outcome flow across one reflection boundary."""

    correct_to_correct: int
    correct_to_incorrect: int
    incorrect_to_correct: int
    incorrect_to_incorrect: int

    @property
    def n(self) -> int:
        return (
            self.correct_to_correct
            + self.correct_to_incorrect
            + self.incorrect_to_correct
            + self.incorrect_to_incorrect
        )

    @property
    def corrected(self) -> int:
        return self.incorrect_to_correct

    @property
    def regressed(self) -> int:
        return self.correct_to_incorrect

    @property
    def corrected_fraction(self) -> float:
        incorrect_before = self.incorrect_to_correct + self.incorrect_to_incorrect
        return self.incorrect_to_correct / incorrect_before if incorrect_before else 0.0

    @property
    def regressed_fraction(self) -> float:
        correct_before = self.correct_to_correct + self.correct_to_incorrect
        return self.correct_to_incorrect / correct_before if correct_before else 0.0

    def to_dict(self) -> dict:
        return {
            "correct_to_correct": self.correct_to_correct,
            "correct_to_incorrect": self.correct_to_incorrect,
            "incorrect_to_correct": self.incorrect_to_correct,
            "incorrect_to_incorrect": self.incorrect_to_incorrect,
        }


@dataclass(frozen=True)
class TransitionMatrix:
    """Per-round correctness flow for a cohort of equally-long traces."""

    n_samples: int
    correct_by_round: tuple[int, ...]
    boundaries: tuple[BoundaryCounts, ...]

    @property
    def rounds(self) -> int:
        return len(self.correct_by_round)

    @property
    def initial_correct(self) -> int:
        return self.correct_by_round[0]

    def accuracy_by_round(self) -> tuple[float, ...]:
        return tuple(c / self.n_samples for c in self.correct_by_round)

    def to_sankey(self) -> dict:
        """Node/link structure for flow diagrams, indices into nodes."""
        nodes = []
        for r in range(self.rounds):
            nodes.append(f"round{r}_correct")
            nodes.append(f"round{r}_incorrect")
        links = []
        for b, counts in enumerate(self.boundaries):
            src_c, src_i = 2 * b, 2 * b + 1
            dst_c, dst_i = 2 * (b + 1), 2 * (b + 1) + 1
            for src, dst, value in (
                (src_c, dst_c, counts.correct_to_correct),
                (src_c, dst_i, counts.correct_to_incorrect),
                (src_i, dst_c, counts.incorrect_to_correct),
                (src_i, dst_i, counts.incorrect_to_incorrect),
            ):
                if value:
                    links.append({"source": src, "target": dst, "value": value})
        return {
            "nodes": [{"name": n} for n in nodes],
            "links": links,
        }

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "correct_by_round": list(self.correct_by_round),
            "accuracy_by_round": list(self.accuracy_by_round()),
            "boundaries": [b.to_dict() for b in self.boundaries],
        }


def transitions_from_outcomes(outcomes: Sequence[Sequence[bool]]) -> TransitionMatrix:
    """Build the transition matrix from per-sample rows of round verdicts."""
    if not outcomes:
        raise EmptyInput("no outcome rows")
    width = len(outcomes[0])
    if width == 0:
        raise EmptyInput("outcome rows have no rounds")
    for i, row in enumerate(outcomes):
        if len(row) != width:
            raise RaggedInput(
                f"row {i} has {len(row)} rounds, expected {width}; "
                "filter truncated traces before aggregating"
            )
    n = len(outcomes)
    correct_by_round = tuple(
        sum(1 for row in outcomes if row[r]) for r in range(width)
    )
    boundaries = []
    for r in range(width - 1):
        cc = ci = ic = ii = 0
        for row in outcomes:
            before, after = row[r], row[r + 1]
            if before and after:
                cc += 1
            elif before:
                ci += 1
            elif after:
                ic += 1
            else:
                ii += 1
        boundaries.append(BoundaryCounts(cc, ci, ic, ii))
    return TransitionMatrix(n, correct_by_round, tuple(boundaries))


def transitions_from_traces(traces: Sequence) -> TransitionMatrix:
    """Transition matrix from scored traces (verdicts must be attached)."""
    rows = []
    for trace in traces:
        row = []
        for snap in trace.snapshots:
            if snap.verdict is None:
                raise ValueError(
                    f"trace {trace.sample_id!r} round {snap.round_index} has no verdict"
                )
            row.append(snap.verdict.passed)
        rows.append(row)
    return transitions_from_outcomes(rows)
