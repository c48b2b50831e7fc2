#!/usr/bin/env python3
"""Sweep the energy-improvement trials over every supported case.

Runs the positive-side certificate for (m, n) in {(0,1), (1,1), (0,2)} and
the negative-side construction for (m, n) in {(1,1), (2,1)}, 200 trials
each, then prints one summary row per case with the observed slack range.
Artifacts (CSV tables, slack histograms, manifests) land under the output
directory, one subdirectory per case.

Usage: python3 scripts/run_energy_improvement_sweep.py [--out DIR] [--trials N]
"""

import argparse
from pathlib import Path

from thinepi.artifacts import read_csv
from thinepi.cli import RunConfig, run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/energy-sweep")
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    cases = [
        {"m": 0, "n": 1}, {"m": 1, "n": 1}, {"m": 0, "n": 2},
        {"m": 1, "n": 1, "negative": True}, {"m": 2, "n": 1,
                                             "negative": True},
    ]
    print(f"{'case':<22} {'trials':>6} {'min slack':>12} {'max slack':>12} "
          f"{'result':>8}")
    all_passed = True
    for case in cases:
        side = "negative" if case.get("negative") else "positive"
        name = f"m={case['m']} n={case['n']} {side}"
        out_dir = Path(args.out) / f"m{case['m']}-n{case['n']}-{side}"
        config = RunConfig(
            subcommand="epi-check", out_dir=str(out_dir),
            params={"trials": args.trials, **case}, seed=args.seed)
        manifest = run(config)
        rows = read_csv(out_dir / "epi.csv")
        slack = [row["slack"] for row in rows]
        all_passed = all_passed and manifest.passed
        print(f"{name:<22} {len(rows):>6} {min(slack):>12.3e} "
              f"{max(slack):>12.3e} "
              f"{'ok' if manifest.passed else 'FAILED':>8}")
    print(f"\nartifacts under {args.out}/")
    return 0 if all_passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
