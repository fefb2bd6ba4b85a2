"""Versioned little-endian binary format for trained forests.

Layout::

    b"SCRFMODL"  u16 version  u8 plain_rf
    TrainParams  (u32 T, D, candidates, min_leaf, patch_r, coh_r;
                  u8 lambda_code, u8 coherency_norm; f64 lambda_mean, lambda_std;
                  u64 master_seed)
    u32 height, width, channels   u32 n_trees
    per tree:  u64 seed  u32 n_nodes  then nodes in breadth-first order
    split node: u32 id u8 depth u8 0 | u8 kind u16 channel i8[4] offsets
                f64 bias f64 threshold u32 left u32 right f64 lambda f64 gain f64 coherency
    leaf node:  u32 id u8 depth u8 1 | u32 n_pixels f64[C] mean f64[C] var
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .config import COHERENCY_NORMS, LambdaMode, TrainParams
from .forest import Forest, Tree

MAGIC = b"SCRFMODL"
VERSION = 1

_HEAD = struct.Struct("<8sHB")
_PARAMS = struct.Struct("<6IBBddQ")
_DIMS = struct.Struct("<4I")
_TREE = struct.Struct("<QI")
_NODE = struct.Struct("<IBB")
_SPLIT = struct.Struct("<BH4bddIIddd")
_LEAF = struct.Struct("<I")


class ModelFormatError(ValueError):
    pass


def is_plain_rf(params: TrainParams) -> bool:
    return params.lambda_mode.is_zero


def forest_to_bytes(forest: Forest) -> bytes:
    p = forest.params
    h, w, c = forest.shape
    out = [
        _HEAD.pack(MAGIC, VERSION, int(is_plain_rf(p))),
        _PARAMS.pack(
            p.tree_count, p.max_depth, p.candidates_per_node, p.min_leaf_pixels,
            p.split_patch_radius, p.coherency_radius, p.lambda_mode.code,
            COHERENCY_NORMS.index(p.coherency_norm), p.lambda_mode.mean, p.lambda_mode.std,
            p.master_seed,
        ),
        _DIMS.pack(h, w, c, len(forest.trees)),
    ]
    for tree in forest.trees:
        out.append(_TREE.pack(tree.seed, tree.n_nodes))
        for i in range(tree.n_nodes):
            leaf = tree.is_leaf(i)
            out.append(_NODE.pack(i, int(tree.depth[i]), int(leaf)))
            if leaf:
                out.append(_LEAF.pack(int(tree.n_pixels[i])))
                out.append(np.asarray(tree.mean[i], dtype="<f8").tobytes())
                out.append(np.asarray(tree.var[i], dtype="<f8").tobytes())
            else:
                out.append(_SPLIT.pack(
                    int(tree.kind[i]), int(tree.channel[i]), *(int(v) for v in tree.offsets[i]),
                    float(tree.bias[i]), float(tree.threshold[i]), int(tree.left[i]),
                    int(tree.right[i]), float(tree.lam[i]), float(tree.gain[i]),
                    float(tree.coherency[i]),
                ))
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, st: struct.Struct):
        if self.pos + st.size > len(self.data):
            raise ModelFormatError("truncated model file")
        vals = st.unpack_from(self.data, self.pos)
        self.pos += st.size
        return vals

    def floats(self, n: int) -> np.ndarray:
        end = self.pos + 8 * n
        if end > len(self.data):
            raise ModelFormatError("truncated model file")
        arr = np.frombuffer(self.data[self.pos:end], dtype="<f8").astype(np.float64)
        self.pos = end
        return arr


def forest_from_bytes(data: bytes) -> Forest:
    r = _Reader(data)
    magic, version, _plain = r.take(_HEAD)
    if magic != MAGIC:
        raise ModelFormatError("not a forest model file")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    (T, D, cand, min_leaf, patch_r, coh_r, lam_code, norm_code, lam_mean, lam_std,
     master_seed) = r.take(_PARAMS)
    params = TrainParams(
        tree_count=T, max_depth=D, candidates_per_node=cand, min_leaf_pixels=min_leaf,
        split_patch_radius=patch_r, coherency_radius=coh_r,
        lambda_mode=LambdaMode.from_code(lam_code, lam_mean, lam_std),
        master_seed=master_seed, coherency_norm=COHERENCY_NORMS[norm_code],
    )
    h, w, c, n_trees = r.take(_DIMS)
    trees = []
    for _ in range(n_trees):
        seed, n_nodes = r.take(_TREE)
        tree = Tree(
            shape=(h, w, c), max_depth=D, seed=seed,
            depth=np.zeros(n_nodes, dtype=np.int32),
            left=np.full(n_nodes, -1, dtype=np.int32), right=np.full(n_nodes, -1, dtype=np.int32),
            kind=np.zeros(n_nodes, dtype=np.int8), channel=np.zeros(n_nodes, dtype=np.int32),
            offsets=np.zeros((n_nodes, 4), dtype=np.int32), bias=np.zeros(n_nodes),
            threshold=np.zeros(n_nodes), lam=np.zeros(n_nodes), gain=np.zeros(n_nodes),
            coherency=np.zeros(n_nodes), n_pixels=np.zeros(n_nodes, dtype=np.int64),
            mean=np.zeros((n_nodes, c)), var=np.zeros((n_nodes, c)),
        )
        for _ in range(n_nodes):
            i, depth, leaf = r.take(_NODE)
            if i >= n_nodes:
                raise ModelFormatError(f"node id {i} out of range")
            tree.depth[i] = depth
            if leaf:
                (tree.n_pixels[i],) = r.take(_LEAF)
                tree.mean[i] = r.floats(c)
                tree.var[i] = r.floats(c)
            else:
                (kind, ch, o0, o1, o2, o3, bias, thr, left, right, lam, gain, coh) = r.take(_SPLIT)
                tree.kind[i] = kind
                tree.channel[i] = ch
                tree.offsets[i] = (o0, o1, o2, o3)
                tree.bias[i] = bias
                tree.threshold[i] = thr
                tree.left[i] = left
                tree.right[i] = right
                tree.lam[i] = lam
                tree.gain[i] = gain
                tree.coherency[i] = coh
        trees.append(tree)
    if r.pos != len(data):
        raise ModelFormatError("trailing bytes after model payload")
    return Forest(trees, params, [t.seed for t in trees])


def save_forest(path, forest: Forest) -> None:
    Path(path).write_bytes(forest_to_bytes(forest))


def load_forest(path) -> Forest:
    return forest_from_bytes(Path(path).read_bytes())


def read_header(path) -> dict:
    data = Path(path).read_bytes()[: _HEAD.size]
    magic, version, plain = _HEAD.unpack(data)
    if magic != MAGIC:
        raise ModelFormatError("not a forest model file")
    return {"version": version, "plain_rf": bool(plain)}
