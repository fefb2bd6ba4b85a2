"""Training parameters and the per-node lambda policy."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

# published defaults for full-size BSD images
DEFAULT_TREES = 12
DEFAULT_DEPTH = 5
DEFAULT_CANDIDATES = 1000
DEFAULT_MIN_LEAF = 1000
DEFAULT_PATCH_RADIUS = 2  # 5x5 split patches
DEFAULT_COHERENCY_RADIUS = 4  # 9x9 coherency window
BSD_AREA = 481 * 321

LAMBDA_ZERO = "zero"
LAMBDA_FIXED = "fixed"
LAMBDA_GAUSSIAN = "gaussian"
COHERENCY_NORMS = ("sum", "mean")
_LAMBDA_CODES = {LAMBDA_ZERO: 0, LAMBDA_FIXED: 1, LAMBDA_GAUSSIAN: 2}


@dataclass(frozen=True)
class LambdaMode:
    """How the coherency weight is chosen at each split node.

    ``zero`` disables the coherency term entirely (plain density forest);
    ``fixed`` uses ``mean``; ``gaussian`` draws ``max(0, N(mean, std))`` once
    per node.
    """

    kind: str = LAMBDA_GAUSSIAN
    mean: float = 8.0
    std: float = 4.0

    def __post_init__(self):
        if self.kind not in _LAMBDA_CODES:
            raise ValueError(f"unknown lambda mode {self.kind!r}")
        if self.std < 0:
            raise ValueError("lambda std must be non-negative")
        if self.kind == LAMBDA_FIXED and self.mean < 0:
            raise ValueError("lambda must be non-negative")

    @classmethod
    def zero(cls) -> "LambdaMode":
        return cls(LAMBDA_ZERO, 0.0, 0.0)

    @classmethod
    def fixed(cls, value: float) -> "LambdaMode":
        return cls(LAMBDA_FIXED, float(value), 0.0)

    @classmethod
    def gaussian(cls, mean: float = 8.0, std: float = 4.0) -> "LambdaMode":
        return cls(LAMBDA_GAUSSIAN, float(mean), float(std))

    @classmethod
    def parse(cls, text: str) -> "LambdaMode":
        """Accepts ``0``, ``8``, ``N(8,4)`` or ``gauss:8:4``."""
        s = text.strip().lower().replace(" ", "")
        m = re.fullmatch(r"(?:n\(([^,]+),([^)]+)\)|gauss(?:ian)?:([^:]+):([^:]+))", s)
        if m:
            mean, std = (m.group(1), m.group(2)) if m.group(1) else (m.group(3), m.group(4))
            return cls.gaussian(float(mean), float(std))
        if s in ("zero", "rf"):
            return cls.zero()
        value = float(s)
        return cls.zero() if value == 0 else cls.fixed(value)

    @property
    def code(self) -> int:
        return _LAMBDA_CODES[self.kind]

    @classmethod
    def from_code(cls, code: int, mean: float, std: float) -> "LambdaMode":
        kind = {v: k for k, v in _LAMBDA_CODES.items()}[code]
        return cls(kind, mean, std)

    @property
    def is_zero(self) -> bool:
        return self.kind == LAMBDA_ZERO

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == LAMBDA_ZERO:
            return 0.0
        if self.kind == LAMBDA_FIXED:
            return self.mean
        return max(0.0, float(rng.normal(self.mean, self.std)))

    def __str__(self):
        if self.kind == LAMBDA_ZERO:
            return "0"
        if self.kind == LAMBDA_FIXED:
            return f"{self.mean:g}"
        return f"N({self.mean:g},{self.std:g})"


@dataclass(frozen=True)
class TrainParams:
    tree_count: int = DEFAULT_TREES
    max_depth: int = DEFAULT_DEPTH
    candidates_per_node: int = DEFAULT_CANDIDATES
    min_leaf_pixels: int = DEFAULT_MIN_LEAF
    split_patch_radius: int = DEFAULT_PATCH_RADIUS
    coherency_radius: int = DEFAULT_COHERENCY_RADIUS
    lambda_mode: LambdaMode = field(default_factory=LambdaMode)
    master_seed: int = 0
    coherency_norm: str = "sum"

    def __post_init__(self):
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.candidates_per_node < 1:
            raise ValueError("candidates_per_node must be >= 1")
        if self.min_leaf_pixels < 1:
            raise ValueError("min_leaf_pixels must be >= 1")
        if self.split_patch_radius < 0 or self.coherency_radius < 0:
            raise ValueError("radii must be non-negative")
        if self.coherency_norm not in COHERENCY_NORMS:
            raise ValueError(f"coherency_norm must be one of {COHERENCY_NORMS}")
        if not 0 <= self.master_seed < 2**63:
            raise ValueError("master_seed must be in [0, 2**63)")


def scaled_min_leaf(height: int, width: int, min_leaf: int = DEFAULT_MIN_LEAF) -> int:
    """Scale the full-resolution leaf size to a smaller image by area."""
    return max(1, int(round(min_leaf * height * width / BSD_AREA)))
