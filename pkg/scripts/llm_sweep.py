"""Run the loop against a chat-completions endpoint over several block counts.

Needs an [oracle] config file (url, model, ...) and API_KEY in the
environment. Per-run records go next to the CSV reports so every prompt
and reply can be inspected afterwards.
"""

import argparse
from pathlib import Path

from cegisplan.bench import GenConfig, bench_run, export_report, make_oracle_factory
from cegisplan.cegis import LoopConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", required=True)
    ap.add_argument("--model")
    ap.add_argument("--blocks", type=int, nargs="+", default=[3, 4, 5, 6, 7, 8, 9, 10])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--feedback", choices=["rich", "weak"], default="rich")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/llm_sweep")
    args = ap.parse_args()

    factory = make_oracle_factory("http", endpoint_config=args.config, model=args.model)
    loop = LoopConfig(feedback_mode=args.feedback)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n in args.blocks:
        res = bench_run(GenConfig(n, args.seed, args.count), factory, loop, workers=args.workers, records_dir=out / f"n{n}")
        export_report(res, out / f"n{n}.csv")
        print(f"n={n:2d} solved {res.success_count}/{args.count} histogram {res.histogram}")


if __name__ == "__main__":
    main()
