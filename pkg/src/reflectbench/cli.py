"""Command-line entry points: run a strategy grid, render reports, validate.

Exit codes: 0 success, 2 configuration or validation problem, 3 runtime
failure. Secrets never live in config files; provider entries name the
environment variable that holds the key.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal
from pathlib import Path
from typing import Mapping, Optional, Sequence

import jsonschema

from . import engine, reporting
from .datasets import DatasetManifest, load_dataset
from .economics import PricingTable
from .engine import SampleTrace, TraceWriter, attach_verdicts, run_sample
from .errors import HarnessError, ValidationError
from .providers import (
    HttpProvider,
    MockProvider,
    MockScript,
    Provider,
    RecordingProvider,
    ReplayProvider,
    RetryingProvider,
    ThrottledProvider,
)
from .types import FeedbackKind, StrategyConfig, validate_strategy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_STRATEGY_SCHEMA = {
    "type": "object",
    "required": ["model_id"],
    "properties": {
        "model_id": {"type": "string", "minLength": 1},
        "reflection_rounds": {"type": "integer", "minimum": 0},
        "feedback": {"enum": [k.value for k in FeedbackKind]},
        "thinking_budget": {"type": ["integer", "null"], "minimum": 1},
        "judge_model_id": {"type": ["string", "null"]},
        "caching_enabled": {"type": "boolean"},
    },
    "additionalProperties": False,
}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "required": ["dataset", "strategies", "providers", "output_dir", "seed"],
    "properties": {
        "dataset": {"type": ["string", "object"]},
        "strategies": {"type": "array", "minItems": 1, "items": _STRATEGY_SCHEMA},
        "providers": {"type": ["string", "object"]},
        "pricing": {"type": ["string", "object"]},
        "output_dir": {"type": "string", "minLength": 1},
        "seed": {"type": "integer"},
        "concurrency": {"type": "integer", "minimum": 1},
        "strict_grid": {"type": "boolean"},
    },
    "additionalProperties": False,
}


def _schema_errors(config: Mapping) -> list[str]:
    validator = jsonschema.Draft202012Validator(RUN_CONFIG_SCHEMA)
    errors = []
    for err in sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path)):
        where = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path
        )
        errors.append(f"{where}: {err.message}")
    return errors


def _load_json_ref(value, base_dir: Path):
    """Config fields accept inline objects or paths to JSON files."""
    if isinstance(value, Mapping):
        return value, base_dir
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    return json.loads(path.read_text(encoding="utf-8")), path.parent


# ---------------------------------------------------------------------------
# Provider construction


def build_provider(entry: Mapping, base_dir: Path) -> Provider:
    kind = entry.get("kind", "mock")
    opts = dict(entry)
    opts.pop("kind", None)
    retry = opts.pop("retry", None)
    throttle = opts.pop("throttle", None)

    provider: Provider
    if kind == "mock":
        script = MockScript.from_dict(opts["script"]) if "script" in opts else None
        provider = MockProvider(
            script,
            seed=opts.get("seed", 0),
            base_latency_s=opts.get("base_latency_s", 0.5),
            per_token_latency_s=opts.get("per_token_latency_s", 0.01),
        )
    elif kind == "http":
        provider = HttpProvider(
            model_id=opts["model"],
            endpoint=opts["endpoint"],
            auth_env=opts.get("api_key_env"),
            auth_header=opts.get("auth_header", "Authorization"),
            auth_scheme=opts.get("auth_scheme", "Bearer"),
            request_fields=opts.get("request_fields"),
            response_fields=opts.get("response_fields"),
            timeout_s=opts.get("timeout_s", 120.0),
        )
    elif kind == "replay":
        cassette = Path(opts["cassette"])
        if not cassette.is_absolute():
            cassette = base_dir / cassette
        provider = ReplayProvider(cassette)
    else:
        raise ValidationError([f"unknown provider kind {kind!r}"])

    if opts.get("record_cassette"):
        cassette = Path(opts["record_cassette"])
        if not cassette.is_absolute():
            cassette = base_dir / cassette
        provider = RecordingProvider(provider, cassette)
    if retry:
        provider = RetryingProvider(
            provider,
            max_retries=retry.get("max_retries", 5),
            base_delay_s=retry.get("base_delay_s", 0.5),
            max_delay_s=retry.get("max_delay_s", 30.0),
            seed=retry.get("seed", 0),
        )
    if throttle:
        provider = ThrottledProvider(
            provider,
            max_in_flight=throttle.get("max_in_flight", 4),
            rate_per_s=throttle.get("rate_per_s"),
            burst=throttle.get("burst"),
        )
    return provider


def build_providers(raw: Mapping, base_dir: Path) -> dict[str, Provider]:
    models = raw.get("models", raw)
    return {mid: build_provider(entry, base_dir) for mid, entry in models.items()}


# ---------------------------------------------------------------------------
# run


def _load_run_config(config_path: Path):
    raw = json.loads(config_path.read_text(encoding="utf-8"))
    errors = _schema_errors(raw)
    if errors:
        raise ValidationError(errors)
    base_dir = config_path.parent

    dataset_raw, dataset_dir = _load_json_ref(raw["dataset"], base_dir)
    manifest = DatasetManifest.from_dict(dataset_raw, base_dir=dataset_dir)

    strategies = [StrategyConfig.from_dict(s) for s in raw["strategies"]]
    strict = raw.get("strict_grid", False)
    violations = []
    for i, strategy in enumerate(strategies):
        try:
            validate_strategy(strategy, manifest.task, strict_grid=strict)
        except ValidationError as exc:
            violations.extend(f"strategies[{i}]: {v}" for v in exc.violations)
    if violations:
        raise ValidationError(violations)

    providers_raw, providers_dir = _load_json_ref(raw["providers"], base_dir)
    pricing = None
    if "pricing" in raw:
        pricing_raw, _ = _load_json_ref(raw["pricing"], base_dir)
        pricing = PricingTable.from_dict(pricing_raw)

    output_dir = Path(raw["output_dir"])
    if not output_dir.is_absolute():
        output_dir = base_dir / output_dir
    return {
        "manifest": manifest,
        "strategies": strategies,
        "providers_raw": providers_raw,
        "providers_dir": providers_dir,
        "pricing": pricing,
        "output_dir": output_dir,
        "seed": raw["seed"],
        "concurrency": raw.get("concurrency", 4),
        "strict_grid": strict,
    }


def _summarize(traces: Sequence[SampleTrace], pricing: Optional[PricingTable]) -> dict:
    from .analysis import accuracy
    from .economics import aggregate_latency, run_cost

    configs = {}
    for key, group in sorted(reporting.group_traces(traces).items()):
        done = [t for t in group if t.abort_reason is None and t.snapshots]
        entry: dict = {
            "n_traces": len(group),
            "n_completed": len(done),
            "n_aborted": len(group) - len(done),
        }
        if done:
            scores = [t.final_verdict.score for t in done if t.final_verdict is not None]
            if scores:
                entry["accuracy"] = accuracy(scores)
            entry["mean_latency_s"] = aggregate_latency(done).mean
            if pricing is not None:
                strategy = done[0].strategy
                price = pricing.for_model(strategy.model_id)
                total = sum(
                    (run_cost(t.total_usage, price).total for t in done),
                    start=Decimal(0),
                )
                entry["mean_cost"] = str(total / len(done))
        configs[key] = entry
    return configs


def cmd_run(args) -> int:
    config_path = Path(args.config)
    try:
        cfg = _load_run_config(config_path)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, HarnessError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        samples = load_dataset(cfg["manifest"])
    except HarnessError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    jobs = [
        (strategy, sample) for strategy in cfg["strategies"] for sample in samples
    ]
    if args.dry_run:
        print(f"dry run: {len(samples)} samples x {len(cfg['strategies'])} strategies "
              f"= {len(jobs)} jobs; output {cfg['output_dir']}")
        return EXIT_OK

    try:
        providers = build_providers(cfg["providers_raw"], cfg["providers_dir"])
    except (HarnessError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: providers: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    missing = sorted(
        {s.model_id for s in cfg["strategies"]} - set(providers)
        | {
            s.judge_model_id
            for s in cfg["strategies"]
            if s.judge_model_id and s.judge_model_id not in providers
        }
    )
    if missing:
        print(f"config error: no provider entry for model(s): {', '.join(missing)}",
              file=sys.stderr)
        return EXIT_CONFIG

    out_dir = cfg["output_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    traces_path = out_dir / "traces.jsonl"

    try:
        done_keys = engine.completed_keys(traces_path)
    except HarnessError as exc:
        print(f"runtime error: cannot resume from {traces_path}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    pending = [
        (strategy, sample)
        for strategy, sample in jobs
        if (sample.id, strategy.model_id, strategy.label()) not in done_keys
    ]
    print(
        f"running {len(pending)} of {len(jobs)} jobs "
        f"({len(jobs) - len(pending)} already complete)"
    )

    seed = cfg["seed"]

    def work(strategy: StrategyConfig, sample) -> SampleTrace:
        provider = providers[strategy.model_id]
        judge = providers.get(strategy.judge_model_id) if strategy.judge_model_id else None
        trace = run_sample(provider, sample, strategy, judge_provider=judge)
        return attach_verdicts(trace, sample, seed=seed)

    try:
        with TraceWriter(traces_path, seed=seed, append=bool(done_keys)) as writer:
            with ThreadPoolExecutor(max_workers=cfg["concurrency"]) as pool:
                futures = [pool.submit(work, strategy, sample) for strategy, sample in pending]
                # consume in submission order so the file layout is deterministic
                for future in futures:
                    writer.write(future.result())
    except HarnessError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    _, all_traces = engine.read_traces(traces_path)
    summary = {
        "seed": seed,
        "n_samples": len(samples),
        "n_strategies": len(cfg["strategies"]),
        "n_traces": len(all_traces),
        "configs": _summarize(all_traces, cfg["pricing"]),
    }
    (out_dir / "run_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {traces_path} and {out_dir / 'run_summary.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    traces_path = Path(args.traces)
    try:
        _, traces = engine.read_traces(traces_path)
    except (OSError, HarnessError) as exc:
        print(f"config error: cannot read traces: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    pricing = None
    if args.pricing:
        try:
            pricing = PricingTable.load(args.pricing)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            print(f"config error: pricing: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    out_dir = Path(args.out) if args.out else traces_path.parent
    try:
        if args.kind == "frontier":
            bundle = reporting.frontier_report(
                traces,
                pricing=pricing,
                latency_stat=args.latency_stat,
                per_family=args.family,
            )
        elif args.kind == "gains":
            bundle = reporting.gains_report(traces)
        elif args.kind == "transitions":
            bundle = reporting.transitions_report(traces)
        elif args.kind == "significance":
            bundle = reporting.significance_report(traces, seed=args.seed)
        else:  # costs
            if pricing is None:
                print("config error: costs report requires --pricing", file=sys.stderr)
                return EXIT_CONFIG
            bundle = reporting.costs_report(traces, pricing)
        written = reporting.write_report(bundle, out_dir)
    except HarnessError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    config_path = Path(args.config)
    try:
        cfg = _load_run_config(config_path)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, HarnessError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(
        f"config ok: {len(cfg['strategies'])} strategies, task {cfg['manifest'].task.value}, "
        f"output {cfg['output_dir']}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reflectbench",
        description="Benchmark multi-round self-reflection strategies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a strategy grid over a dataset")
    p_run.add_argument("--config", required=True, help="run config JSON")
    p_run.add_argument("--dry-run", action="store_true", help="validate and plan only")
    p_run.set_defaults(func=cmd_run)

    p_report = sub.add_parser("report", help="render reports from a trace file")
    p_report.add_argument("--traces", required=True, help="traces JSONL path")
    p_report.add_argument(
        "--kind", required=True,
        choices=["frontier", "gains", "transitions", "significance", "costs"],
    )
    p_report.add_argument("--out", help="output directory (default: traces dir)")
    p_report.add_argument("--pricing", help="pricing table JSON")
    p_report.add_argument("--family", action="store_true",
                          help="compute one frontier per model family")
    p_report.add_argument("--latency-stat", default="mean",
                          choices=["mean", "p50", "p95"], dest="latency_stat")
    p_report.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p_report.set_defaults(func=cmd_report)

    p_val = sub.add_parser("validate", help="check a run config without executing")
    p_val.add_argument("--config", required=True, help="run config JSON")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
