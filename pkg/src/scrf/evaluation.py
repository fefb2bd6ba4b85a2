"""Boundary precision/recall with a greedy tolerance matcher, and ODS/OIS/AP.

Both predicted and ground-truth boundaries are thinned to one-pixel curves.
Candidate (predicted, truth) pairs within the tolerance radius are matched
greedily by increasing distance, one-to-one per truth map. A predicted pixel
is a true positive if it is matched in any truth map. Recall pools matched
truth pixels over all truth maps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from skimage.morphology import thin

DEFAULT_TOLERANCE = 0.0075
DEFAULT_THRESHOLDS = 30


def tolerance_for_pixels(pixels: float, shape) -> float:
    """Tolerance fraction equivalent to ``pixels`` on an image of ``shape``."""
    return pixels / float(np.hypot(*shape[:2]))


def _greedy_match(pred_pts: np.ndarray, truth_pts: np.ndarray, radius: float):
    """Boolean matched flags for predicted and truth points."""
    pred_hit = np.zeros(len(pred_pts), dtype=bool)
    truth_hit = np.zeros(len(truth_pts), dtype=bool)
    if len(pred_pts) == 0 or len(truth_pts) == 0:
        return pred_hit, truth_hit
    dm = cKDTree(pred_pts).sparse_distance_matrix(cKDTree(truth_pts), radius, output_type="coo_matrix")
    if dm.nnz == 0:
        return pred_hit, truth_hit
    # exact zero distances are dropped by the sparse matrix; add them back
    i, j, d = dm.row, dm.col, dm.data
    pred_idx = {tuple(p): k for k, p in enumerate(pred_pts)}
    same = [(pred_idx[tuple(t)], k) for k, t in enumerate(truth_pts) if tuple(t) in pred_idx]
    if same:
        si, sj = np.array(same).T
        i = np.concatenate([i, si])
        j = np.concatenate([j, sj])
        d = np.concatenate([d, np.zeros(len(si))])
    order = np.lexsort((j, i, d))
    for k in order:
        a, b = i[k], j[k]
        if not pred_hit[a] and not truth_hit[b]:
            pred_hit[a] = True
            truth_hit[b] = True
    return pred_hit, truth_hit


@dataclass
class MatchCounts:
    matched_pred: int
    n_pred: int
    matched_truth: int
    n_truth: int

    @property
    def precision(self) -> float:
        return 1.0 if self.n_pred == 0 else self.matched_pred / self.n_pred

    @property
    def recall(self) -> float:
        return 0.0 if self.n_truth == 0 else self.matched_truth / self.n_truth

    @property
    def f(self) -> float:
        return f_measure(self.precision, self.recall)


def f_measure(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def match_counts(predicted, truths, tolerance: float = DEFAULT_TOLERANCE, thin_truth: bool = True) -> MatchCounts:
    truths = [np.asarray(t, dtype=bool) for t in truths]
    if not truths:
        raise ValueError("at least one ground-truth map is required")
    predicted = np.asarray(predicted, dtype=bool)
    if any(t.shape != predicted.shape for t in truths):
        raise ValueError("predicted and truth maps must share dimensions")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    radius = tolerance * float(np.hypot(*predicted.shape))
    pred_pts = np.argwhere(thin(predicted))
    any_hit = np.zeros(len(pred_pts), dtype=bool)
    matched_truth = 0
    n_truth = 0
    for t in truths:
        t_pts = np.argwhere(thin(t) if thin_truth else t)
        ph, th = _greedy_match(pred_pts, t_pts, radius)
        any_hit |= ph
        matched_truth += int(th.sum())
        n_truth += len(t_pts)
    return MatchCounts(int(any_hit.sum()), len(pred_pts), matched_truth, n_truth)


def match_boundaries(predicted, truths, tolerance: float = DEFAULT_TOLERANCE):
    """Return ``(precision, recall)`` of a binary boundary map against truth maps."""
    c = match_counts(predicted, truths, tolerance)
    return c.precision, c.recall


@dataclass
class PRCurve:
    thresholds: np.ndarray
    counts: list = field(repr=False)

    @property
    def precision(self) -> np.ndarray:
        return np.array([c.precision for c in self.counts])

    @property
    def recall(self) -> np.ndarray:
        return np.array([c.recall for c in self.counts])

    @property
    def f(self) -> np.ndarray:
        return np.array([c.f for c in self.counts])

    @property
    def best_f(self) -> float:
        return float(self.f.max())

    @property
    def best_threshold(self) -> float:
        return float(self.thresholds[int(np.argmax(self.f))])

    @property
    def ap(self) -> float:
        return average_precision(self.recall, self.precision)


def average_precision(recall, precision) -> float:
    """Area under the interpolated PR curve (trapezoids over recall, anchored at r=0)."""
    recall = np.asarray(recall, dtype=np.float64)
    precision = np.asarray(precision, dtype=np.float64)
    order = np.argsort(recall, kind="stable")
    r = recall[order]
    p = np.maximum.accumulate(precision[order][::-1])[::-1]
    r = np.concatenate([[0.0], r])
    p = np.concatenate([[p[0] if p.size else 0.0], p])
    return float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2.0))


def threshold_levels(count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("need at least one threshold")
    return np.arange(1, count + 1) / (count + 1.0)


def pr_curve(contour, truths, thresholds: int = DEFAULT_THRESHOLDS, tolerance: float = DEFAULT_TOLERANCE) -> PRCurve:
    """Sweep ``thresholds`` evenly spaced levels in (0, 1); pixels >= level are boundary."""
    contour = np.asarray(contour, dtype=np.float64)
    levels = threshold_levels(thresholds)
    counts = [match_counts(contour >= t, truths, tolerance) for t in levels]
    return PRCurve(levels, counts)


@dataclass
class Summary:
    ods: float
    ois: float
    ap: float
    ods_threshold: float
    dataset_curve: list = field(repr=False)  # aggregated MatchCounts per threshold


def dataset_summary(curves) -> Summary:
    curves = list(curves)
    if not curves:
        raise ValueError("need at least one PR curve")
    levels = curves[0].thresholds
    agg = []
    for k in range(len(levels)):
        agg.append(MatchCounts(
            sum(c.counts[k].matched_pred for c in curves),
            sum(c.counts[k].n_pred for c in curves),
            sum(c.counts[k].matched_truth for c in curves),
            sum(c.counts[k].n_truth for c in curves),
        ))
    fs = np.array([c.f for c in agg])
    best = int(np.argmax(fs))
    return Summary(
        ods=float(fs[best]),
        ois=float(np.mean([c.best_f for c in curves])),
        ap=float(np.mean([c.ap for c in curves])),
        ods_threshold=float(levels[best]),
        dataset_curve=agg,
    )


def write_report(path, summary: Summary, thresholds) -> None:
    """CSV: one row per threshold with aggregated P/R/F, then a summary row."""
    lines = ["threshold,precision,recall,f"]
    for t, c in zip(thresholds, summary.dataset_curve):
        lines.append(f"{t:.6f},{c.precision:.6f},{c.recall:.6f},{c.f:.6f}")
    lines.append(f"summary,ods={summary.ods:.6f},ois={summary.ois:.6f},ap={summary.ap:.6f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
