"""Forest-path pixel affinities and the spectral-clustering comparison path.

Two pixels are similar when they stay together deep into every tree:
``A(p, q) = 1 - mean_t 2 ** -depth(lca_t(p, q))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh
from sklearn.cluster import KMeans

from .forest import Forest, Tree, leaves_from_path, route

GRID_WEIGHT = 1e-4
DEFAULT_SAMPLES = 20
KMEANS_SEED = 0
DENSE_EIG_LIMIT = 2500


def _path_of(tree: Tree, stack: np.ndarray | None, path: np.ndarray | None):
    return route(tree, stack) if path is None else path


def lca_depth(tree: Tree, p1, p2, stack=None, path=None) -> int:
    """Depth of the deepest node shared by the root-to-leaf paths of two pixels."""
    path = _path_of(tree, stack, path)
    a = path[p1[0], p1[1]]
    b = path[p2[0], p2[1]]
    shared = (a == b) & (a >= 0)
    # paths share a prefix; count it
    return int(np.argmin(np.append(shared, False))) - 1


def lca_depths(paths: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Per-tree LCA depths for flat pixel index pairs; ``paths`` is (T, N, D+1)."""
    a = paths[:, i, :]
    b = paths[:, j, :]
    shared = (a == b) & (a >= 0)
    return np.cumprod(shared, axis=2).sum(axis=2) - 1


def affinity_from_depths(depths) -> np.ndarray:
    depths = np.asarray(depths, dtype=np.float64)
    return 1.0 - np.mean(np.exp2(-depths), axis=0)


def forest_paths(forest: Forest, stack: np.ndarray) -> np.ndarray:
    """(T, H*W, D+1) routed node paths of every tree."""
    return np.stack([route(t, stack).reshape(-1, t.max_depth + 1) for t in forest.trees])


def affinity(forest: Forest, p1, p2, stack=None, paths=None) -> float:
    if paths is None:
        paths = forest_paths(forest, stack)
    w = forest.shape[1]
    i = np.array([p1[0] * w + p1[1]])
    j = np.array([p2[0] * w + p2[1]])
    return float(affinity_from_depths(lca_depths(paths, i, j))[0])


@dataclass
class AffinityGraph:
    """Symmetric weighted graph; edges stored once with ``rows < cols``."""

    n_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    shape: tuple | None = None  # image (H, W) when nodes are pixels

    def to_sparse(self) -> sparse.csr_matrix:
        m = sparse.coo_matrix((self.weights, (self.rows, self.cols)), shape=(self.n_nodes,) * 2)
        return (m + m.T).tocsr()

    @classmethod
    def from_dense(cls, w: np.ndarray, shape=None) -> "AffinityGraph":
        w = np.asarray(w, dtype=np.float64)
        r, c = np.nonzero(np.triu(w, k=1))
        return cls(w.shape[0], r, c, w[r, c], shape)


def _grid_edges(h: int, w: int):
    idx = np.arange(h * w).reshape(h, w)
    r = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    c = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return r, c


def _dedupe_max(r, c, wt, n):
    key = r.astype(np.int64) * n + c
    order = np.lexsort((-wt, key))
    key, r, c, wt = key[order], r[order], c[order], wt[order]
    first = np.ones(len(key), dtype=bool)
    first[1:] = key[1:] != key[:-1]
    return r[first], c[first], wt[first]


def sample_affinity_graph(forest: Forest, stack: np.ndarray, samples_per_pixel: int = DEFAULT_SAMPLES,
                          rng: np.random.Generator | None = None, grid: bool = True) -> AffinityGraph:
    """Sample ``samples_per_pixel`` co-leaf partners per pixel, uniform over the union of its leaves.

    Uniformity over the union (not the multiset of leaves) is obtained by
    drawing a tree in proportion to the pixel's leaf size, a member of that
    leaf, and accepting it with probability ``1 / (number of trees in which the
    pair shares a leaf)``. Duplicate edges keep their maximum weight; weak grid
    edges make the graph connected.
    """
    if samples_per_pixel < 1:
        raise ValueError("samples_per_pixel must be >= 1")
    rng = rng or np.random.default_rng(0)
    paths = forest_paths(forest, stack)
    h, w = forest.shape[:2]
    n = h * w
    T = len(forest.trees)
    leaves = np.stack([leaves_from_path(p.reshape(h, w, -1)).ravel() for p in paths])  # (T, N)
    # members of every leaf, per tree, as (sorted pixel list, start offset, size)
    orders, starts, sizes = [], [], []
    for t in range(T):
        order = np.argsort(leaves[t], kind="stable")
        n_ids = int(leaves[t].max()) + 1
        counts = np.bincount(leaves[t], minlength=n_ids)
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        orders.append(order)
        starts.append(start[leaves[t]])
        sizes.append(counts[leaves[t]])
    orders = np.stack(orders)
    starts = np.stack(starts)  # (T, N)
    sizes = np.stack(sizes)  # (T, N)
    cum = np.cumsum(sizes, axis=0)  # (T, N)

    src = np.repeat(np.arange(n), samples_per_pixel)
    dst = np.full(src.shape, -1)
    pending = np.arange(src.size)
    while pending.size:
        p = src[pending]
        u_tree, u_member, u_accept = rng.random((3, pending.size))
        pick = u_tree * cum[-1, p]
        t = (cum[:, p] <= pick[None, :]).sum(axis=0)
        t = np.minimum(t, T - 1)
        k = np.minimum((u_member * sizes[t, p]).astype(np.int64), sizes[t, p] - 1)
        q = orders[t, starts[t, p] + k]
        mult = (leaves[:, p] == leaves[:, q]).sum(axis=0)
        ok = u_accept * mult < 1.0
        dst[pending[ok]] = q[ok]
        pending = pending[~ok]

    keep = src != dst
    i, j = src[keep], dst[keep]
    r, c = np.minimum(i, j), np.maximum(i, j)
    wt = affinity_from_depths(lca_depths(paths, r, c))
    nz = wt > 0
    r, c, wt = r[nz], c[nz], wt[nz]
    if grid:
        gr, gc = _grid_edges(h, w)
        r = np.concatenate([r, gr])
        c = np.concatenate([c, gc])
        wt = np.concatenate([wt, np.full(gr.size, GRID_WEIGHT)])
    r, c, wt = _dedupe_max(r, c, wt, n)
    return AffinityGraph(n, r, c, wt, (h, w))


def spectral_embedding(graph: AffinityGraph, k: int) -> np.ndarray:
    """Top-``k`` eigenvectors of D^-1/2 W D^-1/2 with unit-normalized rows."""
    W = graph.to_sparse()
    deg = np.asarray(W.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(np.maximum(deg, 1e-12))
    S = sparse.diags(inv_sqrt) @ W @ sparse.diags(inv_sqrt)
    n = graph.n_nodes
    if n <= DENSE_EIG_LIMIT or k >= n - 1:
        _, vecs = np.linalg.eigh(S.toarray())
        vecs = vecs[:, ::-1][:, :k]
    else:
        v0 = np.full(n, 1.0 / np.sqrt(n))
        vals, vecs = eigsh(S, k=k, which="LA", v0=v0, tol=1e-10)
        vecs = vecs[:, np.argsort(-vals)]
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs / np.maximum(norms, 1e-12)


def spectral_segment(graph: AffinityGraph, k: int) -> np.ndarray:
    """Cluster graph nodes into ``k`` groups; returns labels (reshaped to the image if known)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > graph.n_nodes:
        raise ValueError(f"k={k} exceeds node count {graph.n_nodes}")
    emb = spectral_embedding(graph, k)
    km = KMeans(n_clusters=k, n_init=50, max_iter=100, random_state=KMEANS_SEED)
    labels = km.fit_predict(emb)
    labels = _canonical_labels(labels)
    return labels.reshape(graph.shape) if graph.shape is not None else labels


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel clusters in order of first appearance."""
    values, first = np.unique(labels, return_index=True)
    remap = np.zeros(int(values.max()) + 1, dtype=np.int64)
    remap[values[np.argsort(first)]] = np.arange(values.size)
    return remap[labels]


def default_cluster_count(forest: Forest) -> int:
    return max(2, int(round(np.mean([len(t.leaves) for t in forest.trees]))))
