import numpy as np
import pytest
from conftest import bisection_tree, ramp_stack
from hypothesis import given
from hypothesis import strategies as st

from scrf.affinity import (
    GRID_WEIGHT,
    AffinityGraph,
    affinity,
    default_cluster_count,
    lca_depth,
    sample_affinity_graph,
    spectral_segment,
)
from scrf.config import TrainParams
from scrf.forest import Forest, leaf_segmentation, train_forest
from scrf.synth import SynthSpec, generate


@pytest.fixture(scope="module")
def bisection_forest():
    tree = bisection_tree(64, 5)
    return Forest([tree], TrainParams(tree_count=1, max_depth=5), [0]), ramp_stack(64)


def test_lca_depths_on_bisection_tree(bisection_forest):
    forest, stack = bisection_forest
    tree = forest.trees[0]
    assert lca_depth(tree, (0, 0), (0, 63), stack) == 0
    assert lca_depth(tree, (0, 0), (0, 1), stack) == 5
    assert lca_depth(tree, (0, 0), (0, 2), stack) == 4
    assert lca_depth(tree, (0, 5), (0, 5), stack) == 5


def test_affinity_identities(bisection_forest):
    forest, stack = bisection_forest
    assert affinity(forest, (0, 0), (0, 63), stack) == 0.0
    assert affinity(forest, (0, 0), (0, 1), stack) == 1 - 2.0**-5 == 0.96875
    assert affinity(forest, (0, 31), (0, 32), stack) == 0.0


def test_affinity_averages_over_trees(bisection_forest):
    forest, stack = bisection_forest
    flipped = bisection_tree(64, 5)
    # the second tree sends column 0 and column 1 apart at the root
    flipped.channel[:] = 0
    flipped.threshold[0] = 0.5
    two = Forest([forest.trees[0], flipped], forest.params, [0, 1])
    assert affinity(two, (0, 0), (0, 1), stack) == 0.484375


@given(seed=st.integers(0, 1000))
def test_affinity_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    forest = _small_forest()
    stack = _small_forest.stack
    p, q = tuple(rng.integers(0, 16, 2)), tuple(rng.integers(0, 16, 2))
    a = affinity(forest, p, q, stack)
    assert a == affinity(forest, q, p, stack)
    assert 0.0 <= a <= 1 - 2.0**-forest.params.max_depth


def _small_forest():
    if not hasattr(_small_forest, "forest"):
        stack = generate(SynthSpec(size=16, seed=0))[0]
        _small_forest.stack = stack
        _small_forest.forest = train_forest(
            stack, TrainParams(tree_count=3, max_depth=3, candidates_per_node=30,
                               min_leaf_pixels=8, coherency_radius=1), jobs=1)
    return _small_forest.forest


def test_sampled_graph_properties():
    forest = _small_forest()
    stack = _small_forest.stack
    g = sample_affinity_graph(forest, stack, 5, np.random.default_rng(0))
    assert np.all(g.rows < g.cols)
    assert len(set(zip(g.rows.tolist(), g.cols.tolist()))) == len(g.rows)
    W = g.to_sparse()
    assert (W != W.T).nnz == 0
    leaves = np.stack([leaf_segmentation(t, stack).ravel() for t in forest.trees])
    strong = g.weights > GRID_WEIGHT
    # every sampled partner shares a leaf with its source in at least one tree
    assert np.all((leaves[:, g.rows[strong]] == leaves[:, g.cols[strong]]).any(axis=0))
    again = sample_affinity_graph(forest, stack, 5, np.random.default_rng(0))
    assert np.array_equal(g.weights, again.weights)
    with pytest.raises(ValueError):
        sample_affinity_graph(forest, stack, 0)


def test_two_cliques_recovered():
    w = np.zeros((10, 10))
    w[:4, :4] = 1.0
    w[4:, 4:] = 1.0
    np.fill_diagonal(w, 0.0)
    labels = spectral_segment(AffinityGraph.from_dense(w), 2)
    assert labels.tolist() == [0] * 4 + [1] * 6


def test_spectral_on_image_graph_shape():
    forest = _small_forest()
    g = sample_affinity_graph(forest, _small_forest.stack, 5)
    labels = spectral_segment(g, 3)
    assert labels.shape == (16, 16)
    assert set(np.unique(labels)) == {0, 1, 2}
    assert default_cluster_count(forest) >= 2


def test_bad_cluster_counts():
    g = AffinityGraph.from_dense(np.ones((3, 3)) - np.eye(3))
    with pytest.raises(ValueError):
        spectral_segment(g, 1)
    with pytest.raises(ValueError):
        spectral_segment(g, 4)
