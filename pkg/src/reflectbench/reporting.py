"""Report builders: plot-ready CSV/JSON derived from trace files.

Every builder takes scored traces (verdicts attached) grouped by
configuration and returns a JSON-serializable bundle; writers put the
tabular views alongside as CSV. No plotting here by design.
"""

from __future__ import annotations

import csv
import json
import sys
from decimal import Decimal
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .analysis import (
    FrontierPoint,
    TransitionMatrix,
    accuracy,
    pareto_frontier,
    relative_gain,
    transitions_from_traces,
)
from .economics import (
    CostBreakdown,
    PricingTable,
    aggregate_latency,
    caching_cost_model,
    run_cost,
)
from .engine import SampleTrace
from .errors import EmptyInput, ZeroBaseline
from .stats import (
    DEFAULT_BOOTSTRAP_REPLICATES,
    bootstrap_accuracies,
    friedman_test,
    nemenyi_posthoc,
    welch_t_test,
)

BOOTSTRAP_CAVEAT = (
    "significance caveat: tests run on bootstrap replicates of the same "
    "examples, not independent samples; p-values understate uncertainty"
)


def config_key(trace: SampleTrace) -> str:
    return f"{trace.strategy.model_id}/{trace.strategy.label()}"


def group_traces(traces: Sequence[SampleTrace]) -> dict[str, list[SampleTrace]]:
    """Traces keyed by configuration, insertion order preserved."""
    groups: dict[str, list[SampleTrace]] = {}
    for trace in traces:
        groups.setdefault(config_key(trace), []).append(trace)
    return groups


def _complete(traces: Sequence[SampleTrace]) -> list[SampleTrace]:
    return [t for t in traces if t.abort_reason is None and t.snapshots]


def _final_scores(traces: Sequence[SampleTrace]) -> list[float]:
    scores = []
    for t in traces:
        verdict = t.final_verdict
        if verdict is None:
            raise ValueError(f"trace {t.sample_id!r} has no verdict; score it first")
        scores.append(verdict.score)
    return scores


def _round_scores(traces: Sequence[SampleTrace], round_index: int) -> list[float]:
    scores = []
    for t in traces:
        snap = t.snapshots[round_index]
        if snap.verdict is None:
            raise ValueError(f"trace {t.sample_id!r} has no verdict; score it first")
        scores.append(snap.verdict.score)
    return scores


# ---------------------------------------------------------------------------
# Frontier


def build_frontier_points(
    traces: Sequence[SampleTrace],
    *,
    pricing: Optional[PricingTable] = None,
    latency_stat: str = "mean",
    family_of: Optional[Mapping[str, str]] = None,
) -> list[FrontierPoint]:
    if latency_stat not in ("mean", "p50", "p95"):
        raise ValueError("latency_stat must be one of mean, p50, p95")
    points = []
    for key, group in group_traces(traces).items():
        done = _complete(group)
        if not done:
            continue
        strategy = done[0].strategy
        latency = getattr(aggregate_latency(done), latency_stat)
        cost = None
        if pricing is not None:
            price = pricing.for_model(strategy.model_id)
            total = sum((run_cost(t.total_usage, price).total for t in done), Decimal(0))
            cost = float(total / len(done))
        family = strategy.model_id
        if family_of:
            family = family_of.get(strategy.model_id, family)
        points.append(
            FrontierPoint(
                model_id=strategy.model_id,
                strategy_label=strategy.label(),
                accuracy=accuracy(_final_scores(done)),
                latency_s=latency,
                cost=cost,
                family=family,
            )
        )
    return points


def frontier_report(
    traces: Sequence[SampleTrace],
    *,
    pricing: Optional[PricingTable] = None,
    latency_stat: str = "mean",
    per_family: bool = False,
    family_of: Optional[Mapping[str, str]] = None,
) -> dict:
    points = build_frontier_points(
        traces, pricing=pricing, latency_stat=latency_stat, family_of=family_of
    )
    if not points:
        raise EmptyInput("no completed traces to build a frontier from")
    groups: dict[str, list[FrontierPoint]]
    if per_family:
        groups = {}
        for p in points:
            groups.setdefault(p.family, []).append(p)
    else:
        groups = {"all": points}
    frontiers = {
        name: [p.to_dict() for p in pareto_frontier(pts)]
        for name, pts in sorted(groups.items())
    }
    on_frontier = {
        (p["model_id"], p["strategy_label"]) for pts in frontiers.values() for p in pts
    }
    return {
        "kind": "frontier",
        "latency_stat": latency_stat,
        "points": [
            {**p.to_dict(), "on_frontier": (p.model_id, p.strategy_label) in on_frontier}
            for p in points
        ],
        "frontiers": frontiers,
    }


# ---------------------------------------------------------------------------
# Gains (improvement of the final round over round 0)


def gains_report(traces: Sequence[SampleTrace]) -> dict:
    rows = []
    for key, group in sorted(group_traces(traces).items()):
        done = _complete(group)
        if not done:
            continue
        rounds = min(len(t.snapshots) for t in done)
        base = accuracy(_round_scores(done, 0))
        final = accuracy(_round_scores(done, rounds - 1))
        try:
            gain = relative_gain(final, base)
        except ZeroBaseline:
            gain = None
        strategy = done[0].strategy
        rows.append(
            {
                "config": key,
                "model_id": strategy.model_id,
                "strategy_label": strategy.label(),
                "n_samples": len(done),
                "rounds": rounds - 1,
                "round0_accuracy": base,
                "final_accuracy": final,
                "relative_gain_pct": gain,
            }
        )
    if not rows:
        raise EmptyInput("no completed traces to compute gains from")
    return {"kind": "gains", "rows": rows}


# ---------------------------------------------------------------------------
# Transitions


def transitions_report(traces: Sequence[SampleTrace]) -> dict:
    configs = {}
    for key, group in sorted(group_traces(traces).items()):
        done = _complete(group)
        if not done:
            continue
        # only equally-long traces form a matrix; aborted ones were dropped above
        depth = min(len(t.snapshots) for t in done)
        trimmed = [
            t if len(t.snapshots) == depth else _trim(t, depth) for t in done
        ]
        matrix: TransitionMatrix = transitions_from_traces(trimmed)
        configs[key] = {
            "matrix": matrix.to_dict(),
            "sankey": matrix.to_sankey(),
            "corrected_fraction_by_boundary": [
                b.corrected_fraction for b in matrix.boundaries
            ],
            "regressed_fraction_by_boundary": [
                b.regressed_fraction for b in matrix.boundaries
            ],
        }
    if not configs:
        raise EmptyInput("no completed traces to compute transitions from")
    return {"kind": "transitions", "configs": configs}


def _trim(trace: SampleTrace, depth: int) -> SampleTrace:
    from dataclasses import replace

    return replace(trace, snapshots=trace.snapshots[:depth])


# ---------------------------------------------------------------------------
# Significance


def significance_report(
    traces: Sequence[SampleTrace],
    *,
    seed: int = 0,
    n_replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
    warn_stream=None,
) -> dict:
    """Bootstrap + Welch/Friedman/Nemenyi across configurations.

    Follows the replicate-resampling recipe exactly, so the caveat is
    part of the artifact: replicates reuse the same examples and the
    resulting p-values understate uncertainty.
    """
    print(BOOTSTRAP_CAVEAT, file=warn_stream if warn_stream is not None else sys.stderr)
    replicates = {}
    for key, group in sorted(group_traces(traces).items()):
        done = _complete(group)
        if len(done) >= 2:
            replicates[key] = bootstrap_accuracies(
                _final_scores(done), n_replicates=n_replicates, seed=seed
            )
    if not replicates:
        raise EmptyInput("need at least one configuration with 2+ completed traces")
    keys = sorted(replicates)
    welch = {}
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            try:
                res = welch_t_test(replicates[a], replicates[b])
                welch[f"{a} vs {b}"] = {
                    "t": res.statistic,
                    "df": res.df,
                    "p_value": res.p_value,
                }
            except Exception as exc:  # degenerate pairs stay in the report
                welch[f"{a} vs {b}"] = {"error": f"{type(exc).__name__}: {exc}"}
    bundle: dict = {
        "kind": "significance",
        "caveat": BOOTSTRAP_CAVEAT,
        "n_replicates": n_replicates,
        "seed": seed,
        "configs": keys,
        "bootstrap_mean_accuracy": {k: float(replicates[k].mean()) for k in keys},
        "welch": welch,
    }
    if len(keys) >= 3:
        matrix = [
            [float(replicates[k][i]) for k in keys] for i in range(n_replicates)
        ]
        fr = friedman_test(matrix)
        nem = nemenyi_posthoc(matrix)
        bundle["friedman"] = {
            "statistic": fr.statistic,
            "df": fr.df,
            "p_value": fr.p_value,
            "average_ranks": dict(zip(keys, fr.average_ranks)),
        }
        bundle["nemenyi_p_values"] = [list(row) for row in nem.p_values]
    return bundle


# ---------------------------------------------------------------------------
# Costs


def costs_report(traces: Sequence[SampleTrace], pricing: PricingTable) -> dict:
    rows = []
    for key, group in sorted(group_traces(traces).items()):
        done = _complete(group)
        if not done:
            continue
        strategy = done[0].strategy
        price = pricing.for_model(strategy.model_id)
        total = CostBreakdown()
        savings = []
        for t in done:
            total += run_cost(t.total_usage, price)
            if len(t.snapshots) > 1:
                _, _, frac = caching_cost_model(t, price)
                savings.append(frac)
        latency = aggregate_latency(done)
        rows.append(
            {
                "config": key,
                "model_id": strategy.model_id,
                "strategy_label": strategy.label(),
                "n_samples": len(done),
                "total_cost": str(total.total),
                "mean_cost": str(total.total / len(done)),
                "cost_breakdown": total.to_dict(),
                "mean_latency_s": latency.mean,
                "p50_latency_s": latency.p50,
                "p95_latency_s": latency.p95,
                "mean_caching_savings_fraction": (
                    sum(savings) / len(savings) if savings else None
                ),
                "estimated_usage_traces": sum(1 for t in done if t.estimated_usage_flag),
            }
        )
    if not rows:
        raise EmptyInput("no completed traces to cost")
    return {"kind": "costs", "as_of": pricing.as_of, "rows": rows}


# ---------------------------------------------------------------------------
# Writers


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_report(bundle: dict, out_dir: Path | str) -> list[Path]:
    """Persist a report bundle: always JSON, plus CSV tabular views."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = bundle["kind"]
    written = []
    json_path = out_dir / f"{kind}.json"
    json_path.write_text(
        json.dumps(bundle, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    written.append(json_path)

    if kind == "frontier":
        csv_path = out_dir / "frontier.csv"
        _write_csv(
            csv_path,
            ["model_id", "strategy_label", "family", "accuracy", "latency_s", "cost", "on_frontier"],
            [
                [
                    p["model_id"], p["strategy_label"], p["family"],
                    p["accuracy"], p["latency_s"], p["cost"], p["on_frontier"],
                ]
                for p in bundle["points"]
            ],
        )
        written.append(csv_path)
    elif kind == "gains":
        csv_path = out_dir / "gains.csv"
        _write_csv(
            csv_path,
            [
                "config", "n_samples", "rounds",
                "round0_accuracy", "final_accuracy", "relative_gain_pct",
            ],
            [
                [
                    r["config"], r["n_samples"], r["rounds"],
                    r["round0_accuracy"], r["final_accuracy"], r["relative_gain_pct"],
                ]
                for r in bundle["rows"]
            ],
        )
        written.append(csv_path)
    elif kind == "transitions":
        csv_path = out_dir / "transitions.csv"
        rows = []
        for config, data in bundle["configs"].items():
            for b, counts in enumerate(data["matrix"]["boundaries"]):
                rows.append(
                    [
                        config, b,
                        counts["correct_to_correct"], counts["correct_to_incorrect"],
                        counts["incorrect_to_correct"], counts["incorrect_to_incorrect"],
                    ]
                )
        _write_csv(
            csv_path,
            [
                "config", "boundary",
                "correct_to_correct", "correct_to_incorrect",
                "incorrect_to_correct", "incorrect_to_incorrect",
            ],
            rows,
        )
        written.append(csv_path)
    elif kind == "significance":
        if "nemenyi_p_values" in bundle:
            csv_path = out_dir / "nemenyi_p_values.csv"
            keys = bundle["configs"]
            _write_csv(
                csv_path,
                ["config"] + list(keys),
                [[k] + list(row) for k, row in zip(keys, bundle["nemenyi_p_values"])],
            )
            written.append(csv_path)
        csv_path = out_dir / "welch_p_values.csv"
        _write_csv(
            csv_path,
            ["pair", "t", "df", "p_value"],
            [
                [pair, r.get("t"), r.get("df"), r.get("p_value", r.get("error"))]
                for pair, r in bundle["welch"].items()
            ],
        )
        written.append(csv_path)
    elif kind == "costs":
        csv_path = out_dir / "costs.csv"
        _write_csv(
            csv_path,
            [
                "config", "n_samples", "total_cost", "mean_cost",
                "mean_latency_s", "p50_latency_s", "p95_latency_s",
                "mean_caching_savings_fraction", "estimated_usage_traces",
            ],
            [
                [
                    r["config"], r["n_samples"], r["total_cost"], r["mean_cost"],
                    r["mean_latency_s"], r["p50_latency_s"], r["p95_latency_s"],
                    r["mean_caching_savings_fraction"], r["estimated_usage_traces"],
                ]
                for r in bundle["rows"]
            ],
        )
        written.append(csv_path)
    return written
