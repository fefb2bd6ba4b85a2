"""Reusable experiment drivers shared by the scripts and the acceptance suite."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from skimage.measure import label

from .config import LambdaMode, TrainParams
from .contour import forest_contour, normalize_contour
from .datasets import find_images
from .evaluation import dataset_summary, pr_curve, tolerance_for_pixels
from .forest import Forest, train_forest
from .image import build_feature_stack, load_image
from .synth import SynthSpec, generate

SYNTH_MIN_LEAF = 50
SYNTH_TOLERANCE_PX = 2.0


@dataclass
class SyntheticResult:
    lam: str
    seed: int
    best_f: float
    recall: float
    precision: float
    components: float  # mean connected-component count of the tree leaf segmentations
    seconds: float
    forest: Forest = field(repr=False, default=None)
    contour: np.ndarray = field(repr=False, default=None)


def synthetic_params(mode: LambdaMode, seed: int, **overrides) -> TrainParams:
    base = TrainParams(min_leaf_pixels=SYNTH_MIN_LEAF, lambda_mode=mode, master_seed=seed)
    return replace(base, **overrides)


def component_count(leaf_map: np.ndarray) -> int:
    """8-connected regions of equal leaf id."""
    total = 0
    for leaf in np.unique(leaf_map):
        total += int(label(leaf_map == leaf, connectivity=2).max())
    return total


def run_synthetic(mode: LambdaMode, seed: int, spec: SynthSpec | None = None, jobs: int | None = 1,
                  **overrides) -> SyntheticResult:
    """Train on the synthetic circle and score the forest contour against the analytic boundary."""
    spec = spec or SynthSpec()
    stack, truth = generate(spec)
    params = synthetic_params(mode, seed, **overrides)
    start = time.perf_counter()
    forest = train_forest(stack, params, jobs=jobs)
    secs = time.perf_counter() - start
    contour = normalize_contour(forest_contour(forest, stack))
    curve = pr_curve(contour, [truth], tolerance=tolerance_for_pixels(SYNTH_TOLERANCE_PX, truth.shape))
    k = int(np.argmax(curve.f))
    comps = float(np.mean([component_count(t.train_leaf_map) for t in forest.trees]))
    return SyntheticResult(str(mode), seed, curve.best_f, float(curve.recall[k]),
                           float(curve.precision[k]), comps, secs, forest, contour)


def run_benchmark(root, modes, limit: int = 10, split: str | None = "test", jobs=None,
                  seed: int = 0, progress=print, **overrides) -> dict:
    """ODS/OIS/AP of each lambda mode on the first ``limit`` benchmark images."""
    images = find_images(root, split, limit)
    if not images:
        raise FileNotFoundError(f"no benchmark images with ground truth under {root}")
    curves = {str(m): [] for m in modes}
    for item in images:
        stack = build_feature_stack(load_image(item.image_path))
        truths = item.truths()
        for m in modes:
            params = replace(TrainParams(lambda_mode=m, master_seed=seed), **overrides)
            forest = train_forest(stack, params, jobs=jobs)
            contour = normalize_contour(forest_contour(forest, stack))
            curves[str(m)].append(pr_curve(contour, truths))
            if progress:
                progress(f"{item.image_id} lambda={m} best F {curves[str(m)][-1].best_f:.3f}")
    return {k: dataset_summary(v) for k, v in curves.items()}

