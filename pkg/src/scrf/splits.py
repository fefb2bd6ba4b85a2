"""Pixel-relation split tests on small patches, and random candidate sampling."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np

# AssignmentMap states (int8 maps of shape (H, W))
NOT_AT_NODE = 0
LEFT = 1
RIGHT = 2


class SplitKind(enum.IntEnum):
    VALUE = 0  # f(p1, b)
    ABS_BIAS = 1  # |f(p1, b) - c|
    SUM = 2  # f(p1, b) + f(p2, b)
    DIFF = 3  # f(p1, b) - f(p2, b)
    ABS_DIFF = 4  # |f(p1, b) - f(p2, b)|


N_KINDS = len(SplitKind)


@dataclass(frozen=True)
class SplitFunction:
    kind: SplitKind
    channel: int
    offset1: tuple[int, int]
    offset2: tuple[int, int] = (0, 0)
    bias: float = 0.0
    threshold: float = 0.0

    def as_row(self):
        return (
            int(self.kind),
            int(self.channel),
            (*self.offset1, *self.offset2),
            float(self.bias),
            float(self.threshold),
        )


@dataclass
class SplitBatch:
    """Column-wise storage for many candidates, the layout the numba kernels consume."""

    kind: np.ndarray  # int64 (k,)
    channel: np.ndarray  # int64 (k,)
    offsets: np.ndarray  # int64 (k, 4): dy1, dx1, dy2, dx2
    bias: np.ndarray  # float64 (k,)
    threshold: np.ndarray  # float64 (k,)

    def __len__(self):
        return len(self.kind)

    def __getitem__(self, i) -> SplitFunction:
        o = self.offsets[i]
        return SplitFunction(
            kind=SplitKind(int(self.kind[i])),
            channel=int(self.channel[i]),
            offset1=(int(o[0]), int(o[1])),
            offset2=(int(o[2]), int(o[3])),
            bias=float(self.bias[i]),
            threshold=float(self.threshold[i]),
        )

    @classmethod
    def from_splits(cls, splits) -> "SplitBatch":
        rows = [sf.as_row() for sf in splits]
        return cls(
            kind=np.array([r[0] for r in rows], dtype=np.int64),
            channel=np.array([r[1] for r in rows], dtype=np.int64),
            offsets=np.array([r[2] for r in rows], dtype=np.int64).reshape(-1, 4),
            bias=np.array([r[3] for r in rows], dtype=np.float64),
            threshold=np.array([r[4] for r in rows], dtype=np.float64),
        )


def sample_splits(rng: np.random.Generator, n: int, patch_radius: int, value_ranges) -> SplitBatch:
    """Draw ``n`` random candidates.

    ``value_ranges`` is a ``(channels, 2)`` array of attained (min, max) per
    channel; thresholds (and the AbsBias bias) are drawn uniformly over the
    range of values the chosen kind can produce on that channel.
    """
    value_ranges = np.asarray(value_ranges, dtype=np.float64).reshape(-1, 2)
    n_channels = value_ranges.shape[0]
    if n_channels < 1:
        raise ValueError("need at least one channel")
    if patch_radius < 0:
        raise ValueError("patch_radius must be non-negative")
    kind = rng.integers(0, N_KINDS, size=n)
    channel = rng.integers(0, n_channels, size=n)
    offsets = rng.integers(-patch_radius, patch_radius + 1, size=(n, 4))
    u_bias = rng.random(n)
    u_thr = rng.random(n)

    lo = value_ranges[channel, 0]
    hi = value_ranges[channel, 1]
    span = hi - lo
    t_lo = np.select(
        [kind == SplitKind.VALUE, kind == SplitKind.SUM, kind == SplitKind.DIFF],
        [lo, 2.0 * lo, -span],
        0.0,
    )
    t_hi = np.select(
        [kind == SplitKind.VALUE, kind == SplitKind.SUM, kind == SplitKind.DIFF],
        [hi, 2.0 * hi, span],
        span,
    )
    threshold = t_lo + u_thr * (t_hi - t_lo)
    bias = np.where(kind == SplitKind.ABS_BIAS, lo + u_bias * span, 0.0)
    single = (kind == SplitKind.VALUE) | (kind == SplitKind.ABS_BIAS)
    offsets[single, 2:] = 0
    return SplitBatch(
        kind=kind.astype(np.int64),
        channel=channel.astype(np.int64),
        offsets=offsets.astype(np.int64),
        bias=bias,
        threshold=threshold,
    )


def sample_split(rng: np.random.Generator, patch_radius: int, value_ranges) -> SplitFunction:
    return sample_splits(rng, 1, patch_radius, value_ranges)[0]


@numba.njit(cache=True, inline="always")
def feature_at(stack, kind, ch, dy1, dx1, dy2, dx2, bias, r, c):
    h = stack.shape[0]
    w = stack.shape[1]
    r1 = min(max(r + dy1, 0), h - 1)
    c1 = min(max(c + dx1, 0), w - 1)
    a = stack[r1, c1, ch]
    if kind == 0:
        return a
    if kind == 1:
        return abs(a - bias)
    r2 = min(max(r + dy2, 0), h - 1)
    c2 = min(max(c + dx2, 0), w - 1)
    b = stack[r2, c2, ch]
    if kind == 2:
        return a + b
    if kind == 3:
        return a - b
    return abs(a - b)


def _shifted(chan: np.ndarray, dy: int, dx: int) -> np.ndarray:
    h, w = chan.shape
    rows = np.clip(np.arange(h) + dy, 0, h - 1)
    cols = np.clip(np.arange(w) + dx, 0, w - 1)
    return chan[rows[:, None], cols[None, :]]


def feature_map(sf: SplitFunction, stack: np.ndarray) -> np.ndarray:
    """Evaluate ``sf`` at every pixel; out-of-image offsets clamp to the border."""
    if not 0 <= sf.channel < stack.shape[2]:
        raise ValueError(f"channel {sf.channel} out of range for {stack.shape[2]} channels")
    chan = stack[:, :, sf.channel]
    a = _shifted(chan, *sf.offset1)
    if sf.kind == SplitKind.VALUE:
        return a
    if sf.kind == SplitKind.ABS_BIAS:
        return np.abs(a - sf.bias)
    b = _shifted(chan, *sf.offset2)
    if sf.kind == SplitKind.SUM:
        return a + b
    if sf.kind == SplitKind.DIFF:
        return a - b
    return np.abs(a - b)


def feature_value(sf: SplitFunction, stack: np.ndarray, pixel) -> float:
    r, c = pixel
    h, w = stack.shape[:2]
    if not (0 <= r < h and 0 <= c < w):
        raise ValueError(f"pixel {pixel} outside {h}x{w} image")
    (dy1, dx1), (dy2, dx2) = sf.offset1, sf.offset2
    return float(
        feature_at(stack, int(sf.kind), sf.channel, dy1, dx1, dy2, dx2, sf.bias, r, c)
    )


def apply_split(sf: SplitFunction, stack: np.ndarray, node_mask: np.ndarray) -> np.ndarray:
    """Assignment map: LEFT where the feature is strictly below the threshold."""
    node_mask = np.asarray(node_mask, dtype=bool)
    values = feature_map(sf, stack)
    out = np.zeros(node_mask.shape, dtype=np.int8)
    out[node_mask] = np.where(values[node_mask] < sf.threshold, LEFT, RIGHT)
    return out
