import numpy as np
import pytest

from scrf.config import LambdaMode, TrainParams
from scrf.forest import leaf_segmentation, train_forest
from scrf.model_io import (
    ModelFormatError,
    forest_from_bytes,
    forest_to_bytes,
    load_forest,
    read_header,
    save_forest,
)
from scrf.synth import SynthSpec, generate


@pytest.fixture(scope="module")
def forest_and_stack():
    stack = generate(SynthSpec(size=24, seed=1))[0]
    params = TrainParams(tree_count=2, max_depth=3, candidates_per_node=40, min_leaf_pixels=15,
                         coherency_radius=2, lambda_mode=LambdaMode.gaussian(3, 1), master_seed=4)
    return train_forest(stack, params, jobs=1), stack


def test_round_trip_bytes_and_routing(tmp_path, forest_and_stack):
    forest, stack = forest_and_stack
    path = tmp_path / "m.scrf"
    save_forest(path, forest)
    back = load_forest(path)
    assert forest_to_bytes(back) == path.read_bytes()
    assert back.params == forest.params
    for a, b in zip(forest.trees, back.trees):
        assert np.array_equal(leaf_segmentation(a, stack), leaf_segmentation(b, stack))
        assert np.array_equal(a.threshold, b.threshold)
        assert np.allclose(a.mean[a.leaves], b.mean[b.leaves])


def test_header_flags(tmp_path, forest_and_stack):
    forest, stack = forest_and_stack
    save_forest(tmp_path / "a", forest)
    assert read_header(tmp_path / "a") == {"version": 1, "plain_rf": False}
    rf = train_forest(stack, TrainParams(tree_count=1, max_depth=2, candidates_per_node=10,
                                         min_leaf_pixels=15, lambda_mode=LambdaMode.zero()))
    save_forest(tmp_path / "b", rf)
    assert read_header(tmp_path / "b")["plain_rf"] is True


def test_corrupt_files(forest_and_stack):
    data = forest_to_bytes(forest_and_stack[0])
    with pytest.raises(ModelFormatError):
        forest_from_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(ModelFormatError):
        forest_from_bytes(data[:-5])
    with pytest.raises(ModelFormatError):
        forest_from_bytes(data + b"\0")
    bad_version = data[:8] + (9).to_bytes(2, "little") + data[10:]
    with pytest.raises(ModelFormatError):
        forest_from_bytes(bad_version)
