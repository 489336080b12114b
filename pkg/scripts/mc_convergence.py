#!/usr/bin/env python3
"""Monte-Carlo convergence check against enumerated expected cost.

For a few seeded instances, compares the simulated mean at increasing
trial counts with the exactly enumerated value and prints the error in
standard-error units.

Usage:
    python3 scripts/mc_convergence.py --trials 1000 10000 100000 --seed 3
"""

import argparse
import sys

from bernsched.harness import ExperimentSpec, generate
from bernsched.policies import SeptPolicy, expected_cost_exact, expected_cost_mc


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, nargs="+",
                    default=[1000, 10000, 100000])
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args(argv)

    spec = ExperimentSpec(n_types=2, jobs_per_type=2, machines=2,
                          scheme="separated", count=args.count, seed=args.seed)
    policy = SeptPolicy()
    worst = 0.0
    for idx, inst in enumerate(generate(spec)):
        truth = expected_cost_exact(policy, inst)
        line = [f"i{idx:02d} truth={truth:.4f}"]
        for t in args.trials:
            mean, stderr = expected_cost_mc(policy, inst, trials=t,
                                            seed=args.seed + idx)
            z = abs(mean - truth) / stderr if stderr else 0.0
            worst = max(worst, z)
            line.append(f"T={t}: {mean:.4f} ({z:.2f} se)")
        print("  ".join(line))
    print(f"worst deviation: {worst:.2f} standard errors")
    return 0 if worst <= 4 else 1


if __name__ == "__main__":
    sys.exit(main())
