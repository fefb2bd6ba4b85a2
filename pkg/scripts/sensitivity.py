"""Sensitivity of the synthetic-circle result to the coherency normalisation and lambda spread."""
import argparse

import numpy as np

from scrf.config import LambdaMode
from scrf.experiments import run_synthetic


def summarize(label, results):
    f = np.array([r.best_f for r in results])
    rec = np.array([r.recall for r in results])
    print(f"{label:28s} F {f.mean():.3f} +/- {f.std():.3f}   R {rec.mean():.3f}   "
          f"components {np.median([r.components for r in results]):.1f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--lambdas", default="0.5,1,2,4,8")
    ap.add_argument("--stds", default="0,2,4,8")
    args = ap.parse_args()
    seeds = [16 * s for s in range(args.seeds)]
    summarize("rf (lambda 0)", [run_synthetic(LambdaMode.zero(), s) for s in seeds])
    for norm in ("sum", "mean"):
        for lam in args.lambdas.split(","):
            mode = LambdaMode.fixed(float(lam))
            summarize(f"{norm:4s} lambda {lam}", [run_synthetic(mode, s, coherency_norm=norm) for s in seeds])
    for std in args.stds.split(","):
        mode = LambdaMode.gaussian(8.0, float(std))
        summarize(f"sum  lambda N(8,{std})", [run_synthetic(mode, s) for s in seeds])


if __name__ == "__main__":
    main()
