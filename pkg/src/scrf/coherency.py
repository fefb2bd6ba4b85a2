"""Spatial coherency of a candidate split, evaluated with summed-area tables.

For a pixel p at the node, its coherency is the number of node pixels in the
``(2r+1) x (2r+1)`` window around p that went to the same child as p (p
included), divided by the full window area. The denominator is not reduced at
image borders, so border pixels score lower.
"""
from __future__ import annotations

import numba
import numpy as np

from .splits import LEFT, NOT_AT_NODE, RIGHT, SplitBatch, feature_at


def build_integral(indicator: np.ndarray) -> np.ndarray:
    """(H+1, W+1) table whose (i, j) entry counts ones in ``[0, i) x [0, j)``."""
    ind = np.asarray(indicator).astype(np.int64)
    ii = np.zeros((ind.shape[0] + 1, ind.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(ind, axis=0), axis=1, out=ii[1:, 1:])
    return ii


def box_count(ii: np.ndarray, center, radius: int) -> int:
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    r, c = center
    r0, r1 = max(r - radius, 0), min(r + radius + 1, h)
    c0, c1 = max(c - radius, 0), min(c + radius + 1, w)
    return int(ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0])


def _window_counts(ii: np.ndarray, radius: int) -> np.ndarray:
    """Box count around every pixel at once."""
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    rows = np.arange(h)
    cols = np.arange(w)
    r0 = np.maximum(rows - radius, 0)[:, None]
    r1 = np.minimum(rows + radius + 1, h)[:, None]
    c0 = np.maximum(cols - radius, 0)[None, :]
    c1 = np.minimum(cols + radius + 1, w)[None, :]
    return ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0]


def same_side_counts(assignment: np.ndarray, radius: int) -> np.ndarray:
    """Per pixel: same-child node pixels in its window (0 off the node)."""
    assignment = np.asarray(assignment)
    counts = np.zeros(assignment.shape, dtype=np.int64)
    for side in (LEFT, RIGHT):
        mask = assignment == side
        counts[mask] = _window_counts(build_integral(mask), radius)[mask]
    return counts


def pixel_coherency(assignment: np.ndarray, radius: int) -> np.ndarray:
    return same_side_counts(assignment, radius) / float((2 * radius + 1) ** 2)


def coherency_sum(assignment: np.ndarray, radius: int) -> float:
    """Sum of the per-pixel coherency over all pixels at the node."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    assignment = np.asarray(assignment)
    if not np.any(assignment != NOT_AT_NODE):
        raise ValueError("no pixels at the node")
    total = int(same_side_counts(assignment, radius).sum())
    return total / float((2 * radius + 1) ** 2)


@numba.njit(cache=True, nogil=True)
def _candidate_counts(stack, rows, cols, kind, channel, offsets, bias, threshold, radius):
    n = rows.shape[0]
    k = kind.shape[0]
    r0 = rows.min()
    c0 = cols.min()
    bh = rows.max() - r0 + 1
    bw = cols.max() - c0 + 1
    labels = np.zeros((bh, bw), dtype=np.int8)
    ii_left = np.zeros((bh + 1, bw + 1), dtype=np.int32)
    ii_right = np.zeros((bh + 1, bw + 1), dtype=np.int32)
    out = np.zeros(k, dtype=np.int64)
    for j in range(k):
        kd = kind[j]
        ch = channel[j]
        dy1 = offsets[j, 0]
        dx1 = offsets[j, 1]
        dy2 = offsets[j, 2]
        dx2 = offsets[j, 3]
        b = bias[j]
        t = threshold[j]
        for i in range(n):
            v = feature_at(stack, kd, ch, dy1, dx1, dy2, dx2, b, rows[i], cols[i])
            labels[rows[i] - r0, cols[i] - c0] = 1 if v < t else 2
        for y in range(bh):
            acc_l = 0
            acc_r = 0
            for x in range(bw):
                lab = labels[y, x]
                if lab == 1:
                    acc_l += 1
                elif lab == 2:
                    acc_r += 1
                ii_left[y + 1, x + 1] = ii_left[y, x + 1] + acc_l
                ii_right[y + 1, x + 1] = ii_right[y, x + 1] + acc_r
        total = 0
        for i in range(n):
            y = rows[i] - r0
            x = cols[i] - c0
            ya = max(y - radius, 0)
            yb = min(y + radius + 1, bh)
            xa = max(x - radius, 0)
            xb = min(x + radius + 1, bw)
            if labels[y, x] == 1:
                total += ii_left[yb, xb] - ii_left[ya, xb] - ii_left[yb, xa] + ii_left[ya, xa]
            else:
                total += ii_right[yb, xb] - ii_right[ya, xb] - ii_right[yb, xa] + ii_right[ya, xa]
        out[j] = total
        for i in range(n):
            labels[rows[i] - r0, cols[i] - c0] = 0
    return out


def candidate_coherency(
    stack: np.ndarray, rows: np.ndarray, cols: np.ndarray, batch: SplitBatch, radius: int
) -> np.ndarray:
    """Coherency sum of every candidate in ``batch`` for the node holding (rows, cols)."""
    counts = _candidate_counts(
        stack, rows, cols, batch.kind, batch.channel, batch.offsets, batch.bias,
        batch.threshold, radius,
    )
    return counts / float((2 * radius + 1) ** 2)
