"""Hierarchical contour maps from tree splits.

A node's edge map marks node pixels with an 8-neighbour at the same node on
the other side of the split. Level maps take the pixelwise max over the nodes
of one depth, a tree map weights level ``d`` by ``(D - d) / D``, and the forest
map is the mean over trees.
"""
from __future__ import annotations

import numpy as np

from .forest import Forest, Tree, node_assignment, route
from .splits import LEFT, NOT_AT_NODE, RIGHT

NEIGHBORHOOD = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dy or dx)


def node_edge_map(assignment: np.ndarray) -> np.ndarray:
    a = np.asarray(assignment)
    h, w = a.shape
    padded = np.pad(a, 1, constant_values=NOT_AT_NODE)
    out = np.zeros((h, w), dtype=bool)
    at = a != NOT_AT_NODE
    opposite = np.where(a == LEFT, RIGHT, LEFT)
    for dy, dx in NEIGHBORHOOD:
        out |= padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] == opposite
    return out & at


def level_edge_map(assignments, shape=None) -> np.ndarray:
    """Pixelwise max of the node edge maps of one tree level."""
    out = None
    for a in assignments:
        e = node_edge_map(a)
        out = e if out is None else out | e
    if out is None:
        if shape is None:
            raise ValueError("shape is required for a level without split nodes")
        return np.zeros(shape, dtype=bool)
    return out


def max_contour_value(max_depth: int) -> float:
    return sum((max_depth - d) / max_depth for d in range(max_depth + 1))


def level_maps(tree: Tree, path: np.ndarray) -> np.ndarray:
    """(D + 1, H, W) boolean level edge maps from a routed path array."""
    h, w = path.shape[:2]
    out = np.zeros((tree.max_depth + 1, h, w), dtype=bool)
    for node in range(tree.n_nodes):
        if tree.is_leaf(node):
            continue
        d = tree.depth[node]
        out[d] |= node_edge_map(node_assignment(path, tree, node))
    return out


def contour_from_levels(levels: np.ndarray, max_depth: int) -> np.ndarray:
    weights = np.array([(max_depth - d) / max_depth for d in range(levels.shape[0])])
    return np.tensordot(weights, levels.astype(np.float64), axes=1)


def tree_contour(tree: Tree, stack: np.ndarray) -> np.ndarray:
    path = route(tree, stack)
    return contour_from_levels(level_maps(tree, path), tree.max_depth)


def forest_contour(forest: Forest, stack: np.ndarray) -> np.ndarray:
    maps = [tree_contour(t, stack) for t in forest.trees]
    total = np.zeros_like(maps[0])
    for m in maps:
        total += m
    return total / len(maps)


def normalize_contour(contour: np.ndarray) -> np.ndarray:
    contour = np.asarray(contour, dtype=np.float64)
    peak = contour.max() if contour.size else 0.0
    if peak <= 0:
        return np.zeros_like(contour)
    return contour / peak


def segmentation_boundary(labels: np.ndarray) -> np.ndarray:
    """Pixels with an 8-neighbour carrying a different label."""
    labels = np.asarray(labels)
    h, w = labels.shape
    padded = np.pad(labels, 1, mode="edge")
    out = np.zeros((h, w), dtype=bool)
    for dy, dx in NEIGHBORHOOD:
        out |= padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] != labels
    return out
