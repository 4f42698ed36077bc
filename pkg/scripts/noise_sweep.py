"""Success count against oracle noise, per block count.

Writes one CSV report per (n, p_err) cell plus a summary table, the
shape needed to draw success-vs-size curves.
"""

import argparse
import csv
from pathlib import Path

from cegisplan.bench import GenConfig, bench_run, export_report
from cegisplan.cegis import LoopConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, nargs="+", default=[3, 4, 5, 6, 8, 10])
    ap.add_argument("--p-err", type=float, nargs="+", default=[0.0, 0.1, 0.3, 0.6])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-trials", type=int, default=10)
    ap.add_argument("--feedback", choices=["rich", "weak"], default="rich")
    ap.add_argument("--out", default="results/noise_sweep")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    loop = LoopConfig(max_trials=args.max_trials, feedback_mode=args.feedback)
    rows = []
    for n in args.blocks:
        for p in args.p_err:
            res = bench_run(GenConfig(n, args.seed, args.count), f"noisy:{p}", loop)
            export_report(res, out / f"n{n}_p{p}.csv", timing=False)
            rows.append((n, p, res.success_count, args.count))
            print(f"n={n:2d} p_err={p:.2f} solved {res.success_count}/{args.count} histogram {res.histogram}")
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_blocks", "p_err", "solved", "problems"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
