"""Synthetic two-region images with interleaved GMM intensities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CIRCLE = "circle"
HALF_PLANE = "halfplane"

# (mean, std, weight); the background modes sit between and above the circle modes
DEFAULT_CIRCLE_GMM = ((0.25, 0.05, 0.5), (0.75, 0.05, 0.5))
DEFAULT_BACKGROUND_GMM = ((0.45, 0.05, 0.5), (0.95, 0.05, 0.5))


@dataclass(frozen=True)
class SynthSpec:
    size: int = 64
    shape: str = CIRCLE
    radius_fraction: float = 0.3
    inside_gmm: tuple = DEFAULT_CIRCLE_GMM
    outside_gmm: tuple = DEFAULT_BACKGROUND_GMM
    seed: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("size must be >= 2")
        if self.shape not in (CIRCLE, HALF_PLANE):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == CIRCLE and not 0 < self.radius_fraction < 0.5:
            raise ValueError("radius_fraction must be in (0, 0.5)")
        for gmm in (self.inside_gmm, self.outside_gmm):
            if len(gmm) == 0:
                raise ValueError("empty GMM")
            if any(std <= 0 for _, std, _ in gmm):
                raise ValueError("GMM stds must be positive")
            if abs(sum(w for _, _, w in gmm) - 1.0) > 1e-9:
                raise ValueError("GMM weights must sum to 1")

    def to_text(self) -> str:
        lines = [
            f"size = {self.size}",
            f"shape = {self.shape}",
            f"radius_fraction = {self.radius_fraction!r}",
            f"seed = {self.seed}",
        ]
        for name, gmm in (("inside", self.inside_gmm), ("outside", self.outside_gmm)):
            for i, (mu, sd, w) in enumerate(gmm):
                lines.append(f"{name}_{i} = {mu!r} {sd!r} {w!r}")
        return "\n".join(lines) + "\n"


def region_mask(spec: SynthSpec) -> np.ndarray:
    """True inside the circle (or the left half-plane)."""
    n = spec.size
    rr, cc = np.mgrid[0:n, 0:n].astype(np.float64)
    center = (n - 1) / 2.0
    if spec.shape == CIRCLE:
        radius = spec.radius_fraction * n
        return (rr - center) ** 2 + (cc - center) ** 2 <= radius**2
    return cc < n / 2.0


def region_boundary(region: np.ndarray) -> np.ndarray:
    """Pixels having an 8-neighbour in the other region."""
    region = np.asarray(region, dtype=bool)
    h, w = region.shape
    padded = np.pad(region, 1, mode="edge")
    out = np.zeros_like(region)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy or dx:
                out |= padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] != region
    return out


def _sample_gmm(rng, gmm, n):
    means = np.array([g[0] for g in gmm])
    stds = np.array([g[1] for g in gmm])
    weights = np.array([g[2] for g in gmm])
    comp = rng.choice(len(gmm), size=n, p=weights)
    return means[comp] + stds[comp] * rng.standard_normal(n)


def generate(spec: SynthSpec | None = None):
    """Return ``(stack, boundary)``: a (size, size, 1) image and its true boundary map."""
    spec = spec or SynthSpec()
    rng = np.random.default_rng(spec.seed)
    region = region_mask(spec)
    img = np.empty(region.shape)
    img[region] = _sample_gmm(rng, spec.inside_gmm, int(region.sum()))
    img[~region] = _sample_gmm(rng, spec.outside_gmm, int((~region).sum()))
    return img[:, :, None], region_boundary(region)


def checkerboard(size: int, cell: int = 1) -> np.ndarray:
    rr, cc = np.mgrid[0:size, 0:size]
    return ((rr // cell + cc // cell) % 2).astype(bool)


def step_image(size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    img = np.full((size, size), low)
    img[:, size // 2:] = high
    return img
