"""Desk-scale benchmark: full pipeline on the synthetic dataset, then the
candidate-pool ranking and the tiny detector's cost profile.

    python3 scripts/desk_benchmark.py [--config scripts/desk.ini] [--out runs/desk]
"""

import argparse
import logging
import time
from pathlib import Path

from laid.config import load_config
from laid.nn import tiny_detector_arch
from laid.pipeline import run_pipeline
from laid.profiler import profile
from laid.selection import constraint_filter, format_ranking, rank_and_dedupe, read_pool

HERE = Path(__file__).parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "desk.ini")
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    config = load_config(args.config).update({"out": args.out, "seed": args.seed})
    t0 = time.perf_counter()
    result = run_pipeline(config)
    print(f"pipeline finished in {time.perf_counter() - t0:.1f} s "
          f"(best epochs {result.best_epochs})")
    print((result.out_dir / "metrics.txt").read_text())

    pool = constraint_filter(read_pool(HERE / "candidate_pool.tsv"))
    print(format_ranking(rank_and_dedupe(pool)))
    print()
    print(profile(tiny_detector_arch(config.image_size)).table())


if __name__ == "__main__":
    main()
