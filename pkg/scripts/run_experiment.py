"""Run the toy model-selection experiment and print accuracy / MSE tables.

    python3 scripts/run_experiment.py --fast --instances 5 --out results/fast
    python3 scripts/run_experiment.py --out results/full      # hours on one core
"""
import argparse
import logging
import time
from pathlib import Path

from ksupport.modelsel import GridSpec, default_losses, fast_grid, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--fast", action="store_true", help="coarse k / lambda grid")
    ap.add_argument("--out", default="results/experiment")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    grid = fast_grid() if args.fast else GridSpec()

    def progress(i, entry):
        if "error" in entry:
            logging.info("instance %d %-18s %-9s failed", i, entry["loss"], entry["regularizer"])
        else:
            logging.info("instance %d %-18s %-9s k=%-3d lambda=%-8g acc=%.3f", i,
                         entry["loss"], entry["regularizer"], entry["k"], entry["lam"],
                         entry["accuracy"])

    start = time.perf_counter()
    table = run_experiment(args.instances, args.base_seed, default_losses(), grid,
                           out=args.out, progress=progress)
    print(table.format_tables())
    print(f"{time.perf_counter() - start:.0f} s; wrote {args.out}.csv and {args.out}.json")


if __name__ == "__main__":
    main()
