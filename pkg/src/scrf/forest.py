"""Training of spatially coherent density trees and forests.

Each split node scores its random candidates by the Gaussian information
gain on the candidate's channel plus ``lambda`` times the coherency sum of the
resulting assignment, and keeps the best one. ``coherency_norm="mean"``
divides the coherency sum by the node size instead.
"""
from __future__ import annotations

import math
import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import coherency
from .config import TrainParams
from .image import check_stack
from .splits import LEFT, NOT_AT_NODE, RIGHT, SplitBatch, SplitFunction, SplitKind, feature_at, sample_splits

VAR_EPS = 1e-12
_LOG_2PIE = math.log(2.0 * math.pi * math.e)


def channel_entropy(values) -> float:
    """Differential entropy of a 1-D Gaussian fitted to ``values`` (nats)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("channel_entropy needs at least one value")
    return 0.5 * (_LOG_2PIE + math.log(max(float(values.var()), VAR_EPS)))


def _log_var(values: np.ndarray) -> float:
    return math.log(max(float(values.var()), VAR_EPS))


def information_gain(assignment: np.ndarray, stack: np.ndarray, channel: int) -> float:
    """Unsupervised gain of an assignment measured on one channel.

    ``log var(S) - sum_a |S_a|/|S| log var(S_a)`` with variance clamped at
    ``VAR_EPS``.
    """
    chan = stack[:, :, channel]
    left = chan[assignment == LEFT]
    right = chan[assignment == RIGHT]
    if left.size == 0 or right.size == 0:
        raise ValueError("both children must be non-empty")
    parent = chan[assignment != NOT_AT_NODE]
    n = parent.size
    return _log_var(parent) - (left.size / n) * _log_var(left) - (right.size / n) * _log_var(right)


def score_split(assignment, stack, channel, lam, coherency_radius) -> float:
    gain = information_gain(assignment, stack, channel)
    if lam == 0:
        return gain
    return gain + lam * coherency.coherency_sum(assignment, coherency_radius)


@numba.njit(cache=True, nogil=True)
def _candidate_gains(stack, rows, cols, kind, channel, offsets, bias, threshold, min_leaf, parent_log_var):
    n = rows.shape[0]
    k = kind.shape[0]
    gains = np.full(k, -np.inf)
    n_left = np.zeros(k, dtype=np.int64)
    side = np.empty(n, dtype=np.bool_)
    for j in range(k):
        kd = kind[j]
        ch = channel[j]
        dy1 = offsets[j, 0]
        dx1 = offsets[j, 1]
        dy2 = offsets[j, 2]
        dx2 = offsets[j, 3]
        b = bias[j]
        t = threshold[j]
        nl = 0
        sl = 0.0
        sr = 0.0
        for i in range(n):
            v = feature_at(stack, kd, ch, dy1, dx1, dy2, dx2, b, rows[i], cols[i])
            x = stack[rows[i], cols[i], ch]
            if v < t:
                side[i] = True
                nl += 1
                sl += x
            else:
                side[i] = False
                sr += x
        n_left[j] = nl
        nr = n - nl
        if nl < min_leaf or nr < min_leaf:
            continue
        ml = sl / nl
        mr = sr / nr
        ql = 0.0
        qr = 0.0
        for i in range(n):
            x = stack[rows[i], cols[i], ch]
            if side[i]:
                ql += (x - ml) * (x - ml)
            else:
                qr += (x - mr) * (x - mr)
        vl = max(ql / nl, 1e-12)
        vr = max(qr / nr, 1e-12)
        gains[j] = parent_log_var[ch] - (nl / n) * math.log(vl) - (nr / n) * math.log(vr)
    return gains, n_left


@numba.njit(cache=True, nogil=True)
def _route_left(stack, rows, cols, kd, ch, dy1, dx1, dy2, dx2, b, t):
    out = np.empty(rows.shape[0], dtype=np.bool_)
    for i in range(rows.shape[0]):
        out[i] = feature_at(stack, kd, ch, dy1, dx1, dy2, dx2, b, rows[i], cols[i]) < t
    return out


@dataclass
class NodeDecision:
    split: SplitFunction | None = None
    left: np.ndarray | None = None  # bool mask over the node's pixels
    lam: float = 0.0
    gain: float = 0.0
    coherency: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def score(self) -> float:
        return self.gain + self.lam * self.coherency


def train_node(stack, rows, cols, params: TrainParams, rng: np.random.Generator, depth: int) -> NodeDecision:
    """Pick the best-scoring random split for the pixels (rows, cols), or make a leaf."""
    n = rows.shape[0]
    if n == 0:
        raise ValueError("empty node")
    if depth >= params.max_depth or n < 2 * params.min_leaf_pixels:
        return NodeDecision()
    lam = params.lambda_mode.draw(rng)
    values = stack[rows, cols, :]
    ranges = np.stack([values.min(axis=0), values.max(axis=0)], axis=1)
    batch = sample_splits(rng, params.candidates_per_node, params.split_patch_radius, ranges)
    parent_log_var = np.log(np.maximum(values.var(axis=0), VAR_EPS))
    gains, _ = _candidate_gains(
        stack, rows, cols, batch.kind, batch.channel, batch.offsets, batch.bias,
        batch.threshold, params.min_leaf_pixels, parent_log_var,
    )
    valid = np.flatnonzero(np.isfinite(gains))
    if valid.size == 0:
        return NodeDecision()
    coh = np.zeros(len(batch))
    if not params.lambda_mode.is_zero:
        sub = SplitBatch(
            batch.kind[valid], batch.channel[valid], batch.offsets[valid],
            batch.bias[valid], batch.threshold[valid],
        )
        coh[valid] = coherency.candidate_coherency(stack, rows, cols, sub, params.coherency_radius)
        if params.coherency_norm == "mean":
            coh /= n
        scores = np.full(len(batch), -np.inf)
        scores[valid] = gains[valid] + lam * coh[valid]
    else:
        scores = gains
    best = int(np.argmax(scores))
    if not scores[best] > 0:
        return NodeDecision()
    sf = batch[best]
    (dy1, dx1), (dy2, dx2) = sf.offset1, sf.offset2
    left = _route_left(stack, rows, cols, int(sf.kind), sf.channel, dy1, dx1, dy2, dx2, sf.bias, sf.threshold)
    return NodeDecision(sf, left, lam, float(gains[best]), float(coh[best]))


@dataclass
class Tree:
    """Binary density tree stored as flat per-node arrays in breadth-first order.

    ``left``/``right`` hold child ids (-1 at leaves). Split fields are
    meaningful only where ``left >= 0``. ``train_leaf_map`` is the leaf id of
    every pixel at training time; it is not serialized.
    """

    shape: tuple[int, int, int]
    max_depth: int
    seed: int
    depth: np.ndarray
    left: np.ndarray
    right: np.ndarray
    kind: np.ndarray
    channel: np.ndarray
    offsets: np.ndarray
    bias: np.ndarray
    threshold: np.ndarray
    lam: np.ndarray
    gain: np.ndarray
    coherency: np.ndarray
    n_pixels: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    train_leaf_map: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.depth)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.left < 0)

    def split(self, node: int) -> SplitFunction:
        if self.is_leaf(node):
            raise ValueError(f"node {node} is a leaf")
        o = self.offsets[node]
        return SplitFunction(
            SplitKind(int(self.kind[node])), int(self.channel[node]),
            (int(o[0]), int(o[1])), (int(o[2]), int(o[3])),
            float(self.bias[node]), float(self.threshold[node]),
        )

    def score(self, node: int) -> float:
        return float(self.gain[node] + self.lam[node] * self.coherency[node])

    def leaf_path(self, node: int) -> str:
        """'L'/'R' string from the root down to ``node``."""
        parent = {}
        for i in range(self.n_nodes):
            if self.left[i] >= 0:
                parent[int(self.left[i])] = (i, "L")
                parent[int(self.right[i])] = (i, "R")
        path = []
        while node in parent:
            node, step = parent[node]
            path.append(step)
        return "".join(reversed(path))


def train_tree(stack: np.ndarray, params: TrainParams, seed: int) -> Tree:
    stack = np.ascontiguousarray(check_stack(stack))
    h, w, m = stack.shape
    if h * w < params.min_leaf_pixels:
        raise ValueError(
            f"image has {h * w} pixels, fewer than min_leaf_pixels={params.min_leaf_pixels}"
        )
    rng = np.random.default_rng(seed)
    nodes = []  # dicts in breadth-first id order
    leaf_map = np.full(h * w, -1, dtype=np.int32)
    flat = np.arange(h * w)
    queue = deque([(0, flat)])
    nodes.append({"depth": 0})
    while queue:
        node_id, idx = queue.popleft()
        rows = (idx // w).astype(np.int64)
        cols = (idx % w).astype(np.int64)
        rec = nodes[node_id]
        vals = stack[rows, cols, :]
        rec["n"] = idx.size
        rec["mean"] = vals.mean(axis=0)
        rec["var"] = vals.var(axis=0)
        decision = train_node(stack, rows, cols, params, rng, rec["depth"])
        if decision.is_leaf:
            leaf_map[idx] = node_id
            continue
        left_id, right_id = len(nodes), len(nodes) + 1
        nodes.append({"depth": rec["depth"] + 1})
        nodes.append({"depth": rec["depth"] + 1})
        rec.update(split=decision.split, children=(left_id, right_id), lam=decision.lam,
                   gain=decision.gain, coherency=decision.coherency)
        queue.append((left_id, idx[decision.left]))
        queue.append((right_id, idx[~decision.left]))
    return _pack_tree(nodes, (h, w, m), params.max_depth, seed, leaf_map.reshape(h, w))


def _pack_tree(nodes, shape, max_depth, seed, leaf_map) -> Tree:
    k = len(nodes)
    m = shape[2]
    t = Tree(
        shape=tuple(shape), max_depth=max_depth, seed=seed,
        depth=np.array([r["depth"] for r in nodes], dtype=np.int32),
        left=np.full(k, -1, dtype=np.int32), right=np.full(k, -1, dtype=np.int32),
        kind=np.zeros(k, dtype=np.int8), channel=np.zeros(k, dtype=np.int32),
        offsets=np.zeros((k, 4), dtype=np.int32), bias=np.zeros(k), threshold=np.zeros(k),
        lam=np.zeros(k), gain=np.zeros(k), coherency=np.zeros(k),
        n_pixels=np.array([r.get("n", 0) for r in nodes], dtype=np.int64),
        mean=np.zeros((k, m)), var=np.zeros((k, m)), train_leaf_map=leaf_map,
    )
    for i, r in enumerate(nodes):
        if "mean" in r:
            t.mean[i] = r["mean"]
            t.var[i] = r["var"]
        if "split" in r:
            sf = r["split"]
            t.left[i], t.right[i] = r["children"]
            t.kind[i] = int(sf.kind)
            t.channel[i] = sf.channel
            t.offsets[i] = (*sf.offset1, *sf.offset2)
            t.bias[i] = sf.bias
            t.threshold[i] = sf.threshold
            t.lam[i] = r["lam"]
            t.gain[i] = r["gain"]
            t.coherency[i] = r["coherency"]
    return t


@dataclass
class Forest:
    trees: list
    params: TrainParams
    seeds: list

    @property
    def shape(self):
        return self.trees[0].shape


def tree_seed(master_seed: int, t: int) -> int:
    return master_seed ^ t


def train_forest(stack: np.ndarray, params: TrainParams, jobs: int | None = None, progress=None) -> Forest:
    """Train ``params.tree_count`` trees, tree ``t`` seeded with ``master_seed ^ t``.

    Trees run on a thread pool of ``jobs`` workers (default: CPU count); the
    result does not depend on ``jobs``. ``progress(t, tree, seconds)`` is called
    for each tree, in tree order.
    """
    stack = np.ascontiguousarray(check_stack(stack))
    seeds = [tree_seed(params.master_seed, t) for t in range(params.tree_count)]
    jobs = jobs or os.cpu_count() or 1

    def timed(seed):
        start = time.perf_counter()
        tree = train_tree(stack, params, seed)
        return tree, time.perf_counter() - start

    if jobs == 1 or params.tree_count == 1:
        results = map(timed, seeds)
        trees = []
        for t, (tree, secs) in enumerate(results):
            trees.append(tree)
            if progress:
                progress(t, tree, secs)
    else:
        with ThreadPoolExecutor(max_workers=min(jobs, params.tree_count)) as pool:
            results = list(pool.map(timed, seeds))
        trees = [tree for tree, _ in results]
        if progress:
            for t, (tree, secs) in enumerate(results):
                progress(t, tree, secs)
    return Forest(trees, params, seeds)


def route(tree: Tree, stack: np.ndarray) -> np.ndarray:
    """Node id of every pixel at every depth, shape (H, W, max_depth + 1); -1 past its leaf."""
    stack = np.ascontiguousarray(check_stack(stack))
    if stack.shape != tree.shape:
        raise ValueError(f"stack shape {stack.shape} does not match tree shape {tree.shape}")
    h, w, _ = stack.shape
    path = np.full((h * w, tree.max_depth + 1), -1, dtype=np.int32)
    path[:, 0] = 0
    flat = np.arange(h * w)
    rows_all = (flat // w).astype(np.int64)
    cols_all = (flat % w).astype(np.int64)
    for node in range(tree.n_nodes):
        if tree.is_leaf(node):
            continue
        d = tree.depth[node]
        idx = np.flatnonzero(path[:, d] == node)
        if idx.size == 0:
            continue
        o = tree.offsets[node]
        go_left = _route_left(
            stack, rows_all[idx], cols_all[idx], int(tree.kind[node]), int(tree.channel[node]),
            int(o[0]), int(o[1]), int(o[2]), int(o[3]), float(tree.bias[node]),
            float(tree.threshold[node]),
        )
        child = np.where(go_left, tree.left[node], tree.right[node])
        path[idx, d + 1] = child
    return path.reshape(h, w, tree.max_depth + 1)


def leaves_from_path(path: np.ndarray) -> np.ndarray:
    depth_idx = (path >= 0).sum(axis=2) - 1
    return np.take_along_axis(path, depth_idx[:, :, None], axis=2)[:, :, 0]


def leaf_segmentation(tree: Tree, stack: np.ndarray) -> np.ndarray:
    """Leaf id of every pixel after routing it down ``tree``."""
    return leaves_from_path(route(tree, stack))


def node_assignment(path: np.ndarray, tree: Tree, node: int) -> np.ndarray:
    """AssignmentMap of split node ``node`` from a routed path array."""
    d = tree.depth[node]
    out = np.zeros(path.shape[:2], dtype=np.int8)
    at = path[:, :, d] == node
    out[at] = np.where(path[:, :, d + 1][at] == tree.left[node], LEFT, RIGHT)
    return out
