"""Run the small benchmark grid and print per-configuration means.

Example: python scripts/run_small_grid.py --seeds 5 --out small.csv
"""

import argparse
from pathlib import Path

from sacrp.bench import SMALL_GRID, aggregate, grid_configs, rows_to_csv, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5, help="instances per configuration")
    ap.add_argument("--seed", type=int, default=0, help="first seed")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--out", help="also write the raw CSV rows here")
    args = ap.parse_args()

    rows = run_benchmark(grid_configs(SMALL_GRID, args.seeds, args.seed), time_limit=args.time_limit,
                         workers=args.workers)
    if args.out:
        Path(args.out).write_text(rows_to_csv(rows))
    print(f"{'d':>3} {'w':>3} {'h':>3} {'solver':<7} {'energy':>8} {'gap%':>7} {'opt':>5} {'ms':>9}")
    for s in aggregate(rows):
        gap = "" if s["mean_gap_percent"] is None else f"{s['mean_gap_percent']:.1f}"
        opt = "" if s["optimal_share"] is None else f"{s['optimal_share']:.2f}"
        print(f"{s['d']:>3} {s['w']:>3} {s['h']:>3} {s['solver']:<7} {s['mean_energy']:>8.2f} "
              f"{gap:>7} {opt:>5} {s['mean_runtime_ms']:>9.1f}")
    greedy = [r.gap_percent for r in rows if r.solver == "greedy" and r.gap_percent not in (None, float("inf"))]
    if greedy:
        print(f"greedy mean gap over all instances: {sum(greedy) / len(greedy):.1f}%")


if __name__ == "__main__":
    main()
