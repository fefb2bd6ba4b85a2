"""Contour maps and leaf-segment fragmentation for a sweep of coherency weights."""
import argparse
from pathlib import Path

import numpy as np

from scrf.config import LambdaMode, TrainParams, scaled_min_leaf
from scrf.contour import forest_contour, normalize_contour
from scrf.experiments import component_count
from scrf.export import write_contour
from scrf.forest import train_forest
from scrf.image import build_feature_stack, load_image
from scrf.synth import SynthSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--image", help="input image (default: the synthetic circle)")
    ap.add_argument("--lambdas", default="0,8,16,32")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--out", default="runs/lambda_sweep")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.image:
        stack = build_feature_stack(load_image(args.image))
        min_leaf = scaled_min_leaf(*stack.shape[:2])
    else:
        stack = generate(SynthSpec())[0]
        min_leaf = 50
    print("lambda  median_components  per-seed")
    for text in args.lambdas.split(","):
        mode = LambdaMode.parse(text)
        comps = []
        for s in range(args.seeds):
            params = TrainParams(min_leaf_pixels=min_leaf, lambda_mode=mode, master_seed=16 * s)
            forest = train_forest(stack, params)
            comps.append(np.mean([component_count(t.train_leaf_map) for t in forest.trees]))
            if s == 0:
                write_contour(out / f"contour_lambda{text}.png",
                              normalize_contour(forest_contour(forest, stack)))
        print(f"{text:>6}  {np.median(comps):17.1f}  " + " ".join(f"{c:.1f}" for c in comps))


if __name__ == "__main__":
    main()
