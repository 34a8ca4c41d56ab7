#!/usr/bin/env python3
"""Compare allocation policies on the robust demand-response workload.

Reproduces the headline desk-scale result: with a binding RB budget, the
hybrid policy cuts mean dispatch cost by >20% relative to channel-only
selection.
"""

import argparse
import time

import numpy as np

from goalrba.harness import ChannelConfig, ScenarioConfig, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--capacity", type=int, default=1000)
    args = ap.parse_args()

    means = {}
    started = time.perf_counter()
    for policy in ("channel", "utility", "hybrid"):
        cfg = ScenarioConfig(
            workload="demand_response", policy=policy, rounds=args.rounds,
            seed=args.seed, utility_mode="exact",
            channel=ChannelConfig(capacity=args.capacity),
        )
        costs = [m.goal_value for m in run_scenario(cfg)]
        means[policy] = float(np.mean(costs))
        print(f"{policy:>8}: mean dispatch cost {means[policy]:.3f}")
    reduction = 1.0 - means["hybrid"] / means["channel"]
    print(f"hybrid vs channel cost reduction: {reduction:.1%}")
    print(f"elapsed: {time.perf_counter() - started:.1f}s")


if __name__ == "__main__":
    main()
