#!/usr/bin/env python3
"""Decay-rate study for rescalings toward the blow-up limit.

Part one fits the decay exponent of the constructed input (catalog profile
plus a half-integer mode sitting 1/2 above its homogeneity) for increasing
ladder lengths, showing the fitted exponent approaching 1/2 from below as
the ladder reaches deeper.  Part two solves a batch of seeded near-profile
problems and reports their strictly positive fitted exponents.

Usage: python3 scripts/run_blowup_ladder.py [--out DIR] [--seeds N]
"""

import argparse
from pathlib import Path

import numpy as np

from thinepi.artifacts import write_csv
from thinepi.cli import case_spec
from thinepi.frequency import blowup_fit
from thinepi.grids import radii_ladder
from thinepi.profiles import halfspace_2d, make_profile
from thinepi.solver import solve_thin_obstacle
from thinepi.svgplot import Figure


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/blowup-ladder")
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print("constructed input: exponent vs ladder length "
          "(target 0.5, band = 2 standard errors)")
    print(f"{'m':>3} {'rungs':>6} {'exponent':>9} {'band':>18}")
    ladder_rows = []
    for m in (0, 1):
        p = make_profile(m, 1)
        mode = halfspace_2d(2.0 * m + 1.5)

        def v(points, p=p, mode=mode):
            return p(points) + 0.3 * mode(points)

        for rungs in (8, 12, 16, 20):
            fit = blowup_fit(v, np.zeros(2), m,
                             radii_ladder(0.6, rungs)[::-1])
            print(f"{m:>3} {rungs:>6} {fit.exponent:>9.4f} "
                  f"[{fit.band[0]:.4f}, {fit.band[1]:.4f}]")
            ladder_rows.append({"m": m, "rungs": rungs,
                                "exponent": fit.exponent,
                                "band_lo": fit.band[0],
                                "band_hi": fit.band[1]})
            if rungs == 16:
                write_csv(out / f"decay_m{m}.csv", fit.rows())
                fig = Figure(title=f"distance decay, m={m}",
                             xlabel="radius", ylabel="sup distance",
                             xlog=True, ylog=True)
                fig.add_points(fit.radii, fit.dist_linf, label="measured")
                fig.save(out / f"decay_m{m}.svg")
    write_csv(out / "ladder_study.csv", ladder_rows)

    print("\nsolved near-profile problems: fitted exponents")
    solved_rows = []
    for seed in range(args.seeds):
        sol = solve_thin_obstacle(case_spec("near-profile", 32, seed=seed))
        fit = blowup_fit(sol, np.zeros(2), 0, radii_ladder(0.45, 10)[::-1])
        solved_rows.append({"seed": seed, "exponent": fit.exponent,
                            "positive": fit.exponent > 0.0})
    write_csv(out / "solved_exponents.csv", solved_rows)
    exponents = [row["exponent"] for row in solved_rows]
    print(f"{args.seeds} seeds: min {min(exponents):.3f}, "
          f"max {max(exponents):.3f}, all positive: "
          f"{all(e > 0 for e in exponents)}")
    print(f"artifacts under {args.out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
