#!/usr/bin/env python3
"""Tabulate counterfactual prompt-caching savings for synthetic transcripts.

Cache writes cost a premium on the first call; reads recoup it on every
later round. The break-even point and the savings level both depend on
the price sheet, so the table takes rates as arguments.
"""

from __future__ import annotations

import argparse
import sys

from reflectbench.economics import (
    PriceEntry,
    caching_costs_from_profile,
    synthetic_round_profile,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--prefix", type=int, default=1000, help="shared prompt prefix tokens")
    parser.add_argument("--max-rounds", type=int, default=3)
    parser.add_argument("--prompt-per-round", type=int, default=120)
    parser.add_argument("--output-per-round", type=int, default=80)
    parser.add_argument("--input-per-1k", default="0.003")
    parser.add_argument("--output-per-1k", default="0.015")
    parser.add_argument("--cache-read-per-1k", default=None,
                        help="default: 0.10x the input rate")
    parser.add_argument("--cache-write-per-1k", default=None,
                        help="default: 1.25x the input rate")
    args = parser.parse_args(argv)

    price = PriceEntry.from_rates(
        args.input_per_1k,
        args.output_per_1k,
        args.cache_read_per_1k,
        args.cache_write_per_1k,
    )
    print(
        f"per 1k tokens: input {price.input_per_1k}  output {price.output_per_1k}  "
        f"cache read {price.cache_read_per_1k}  cache write {price.cache_write_per_1k}"
    )
    print(f"prefix {args.prefix} tokens, "
          f"{args.prompt_per_round}+{args.output_per_round} tokens per round\n")
    print(f"{'rounds':>6}  {'uncached $':>12}  {'cached $':>12}  {'savings':>8}")
    for rounds in range(args.max_rounds + 1):
        profile = synthetic_round_profile(
            args.prefix,
            rounds,
            prompt_tokens_per_round=args.prompt_per_round,
            output_tokens_per_round=args.output_per_round,
        )
        uncached, cached, frac = caching_costs_from_profile(profile, price)
        print(f"{rounds:>6}  {uncached.total:>12}  {cached.total:>12}  {frac:>8.1%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
