"""Write loss / gradient curves for every loss to CSV (one file per loss).

    python3 scripts/loss_curves.py --outdir results/curves

The eps-insensitive curve uses eps = 2, h = 0.5, so the flat region and the
two quadratic joins are easy to see when plotted.
"""
import argparse
from pathlib import Path

from ksupport.cli import losscurve_rows
from ksupport.data import atomic_write_text
from ksupport.losses import LossSpec

CURVES = {
    "squared": LossSpec.make("squared"),
    "one-sided-squared": LossSpec.make("one_sided_squared"),
    "hinge": LossSpec.make("huber_hinge", h=0.5),
    "logistic": LossSpec.make("logistic"),
    "exponential": LossSpec.make("exponential"),
    "absolute": LossSpec.make("absolute", h=0.5),
    "eps-insensitive": LossSpec.make("eps_insensitive", h=0.5, eps=2.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="results/curves")
    ap.add_argument("--lo", type=float, default=-4.0)
    ap.add_argument("--hi", type=float, default=4.0)
    ap.add_argument("--step", type=float, default=0.01)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in CURVES.items():
        rows = losscurve_rows(spec, args.lo, args.hi, args.step)
        text = "input,loss,gradient\n" + "".join(f"{t:.17g},{f:.17g},{g:.17g}\n" for t, f, g in rows)
        atomic_write_text(out / f"{name}.csv", text)
        print(out / f"{name}.csv")


if __name__ == "__main__":
    main()
