"""Compare the sorted-search prox with the slow projected-gradient oracle.

    python3 scripts/prox_check.py --trials 500
"""
import argparse
import time

import numpy as np

from ksupport.norms import prox_ksup_sq, prox_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    errs = []
    t_fast = t_oracle = 0.0
    for _ in range(args.trials):
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, d + 1))
        tau = 10 ** rng.uniform(-3, 3)
        v = rng.normal(size=d) * 10 ** rng.uniform(-2, 2)
        t0 = time.perf_counter()
        a = prox_ksup_sq(v, k, tau)
        t1 = time.perf_counter()
        b = prox_oracle(v, k, tau)
        t2 = time.perf_counter()
        t_fast += t1 - t0
        t_oracle += t2 - t1
        errs.append(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(v))))
    errs = np.array(errs)
    print(f"trials {args.trials}: max scaled err {errs.max():.2e}, median {np.median(errs):.2e}")
    print(f"time per call: fast {1e6 * t_fast / args.trials:.1f} us, "
          f"oracle {1e3 * t_oracle / args.trials:.1f} ms")


if __name__ == "__main__":
    main()
