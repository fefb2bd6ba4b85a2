"""Locating BSDS300 / BSDS500 images and their human boundary maps on disk.

Neither dataset is bundled. Both layouts are recognised:

* BSDS300: ``images/{train,test}/<id>.jpg`` and ``human/**/<id>.seg``
* BSDS500: ``images/{train,val,test}/<id>.jpg`` and ``groundTruth/<split>/<id>.mat``
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import loadmat

from .export import read_boundary


@dataclass
class BenchmarkImage:
    image_id: str
    image_path: Path
    truth_paths: list = field(default_factory=list)

    def truths(self) -> list:
        maps = []
        for p in self.truth_paths:
            if p.suffix == ".mat":
                maps.extend(read_mat_boundaries(p))
            else:
                maps.append(read_boundary(p))
        return maps


def read_mat_boundaries(path) -> list:
    """Boundary maps of every annotator in a BSDS500 ground-truth ``.mat`` file."""
    gt = loadmat(path)["groundTruth"]
    return [np.asarray(gt[0, k]["Boundaries"][0, 0], dtype=bool) for k in range(gt.shape[1])]


def find_images(root, split: str | None = "test", limit: int | None = None) -> list:
    """Images under ``root`` that have at least one ground-truth file, sorted by id."""
    root = Path(root)
    img_dir = root / "images"
    if not img_dir.is_dir():
        raise FileNotFoundError(f"{root} has no images/ directory")
    pattern = f"{split}/*.jpg" if split else "**/*.jpg"
    truth_index = {}
    for p in list(root.glob("human/**/*.seg")) + list(root.glob("groundTruth/**/*.mat")):
        truth_index.setdefault(p.stem, []).append(p)
    out = []
    for img in sorted(img_dir.glob(pattern), key=lambda p: p.stem):
        if img.stem in truth_index:
            out.append(BenchmarkImage(img.stem, img, sorted(truth_index[img.stem])))
    if limit is not None:
        out = out[:limit]
    return out
