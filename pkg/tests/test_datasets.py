import numpy as np
from PIL import Image
from scipy.io import savemat

from scrf.config import LambdaMode
from scrf.datasets import find_images
from scrf.experiments import component_count, run_benchmark


def _fake_root(tmp_path, rng):
    (tmp_path / "images" / "test").mkdir(parents=True)
    (tmp_path / "human" / "color" / "1001").mkdir(parents=True)
    (tmp_path / "groundTruth" / "test").mkdir(parents=True)
    for stem in ("11", "22", "33"):
        img = (rng.random((24, 30, 3)) * 255).astype(np.uint8)
        img[:, 15:] //= 4
        Image.fromarray(img).save(tmp_path / "images" / "test" / f"{stem}.jpg")
    seg = "format ascii cr\nwidth 30\nheight 24\nsegments 2\ndata\n"
    seg += "".join(f"0 {r} 0 14\n1 {r} 15 29\n" for r in range(24))
    (tmp_path / "human" / "color" / "1001" / "11.seg").write_text(seg)
    b = np.zeros((24, 30), np.uint8)
    b[:, 15] = 1
    cell = np.empty((1, 2), dtype=object)
    for k in range(2):
        cell[0, k] = {"Boundaries": b, "Segmentation": np.ones((24, 30), np.uint16)}
    savemat(tmp_path / "groundTruth" / "test" / "22.mat", {"groundTruth": cell})
    return tmp_path


def test_find_and_load(tmp_path, rng):
    root = _fake_root(tmp_path, rng)
    items = find_images(root)
    assert [i.image_id for i in items] == ["11", "22"]  # 33 has no truth
    assert len(items[0].truths()) == 1 and len(items[1].truths()) == 2
    assert items[1].truths()[0][:, 15].all()
    assert len(find_images(root, limit=1)) == 1


def test_benchmark_driver(tmp_path, rng):
    root = _fake_root(tmp_path, rng)
    res = run_benchmark(root, [LambdaMode.zero(), LambdaMode.fixed(8)], progress=None, jobs=1,
                        tree_count=2, max_depth=3, candidates_per_node=30, min_leaf_pixels=40)
    assert set(res) == {"0", "8"}
    assert all(0 <= s.ods <= 1 and s.ods <= s.ois + 1e-12 for s in res.values())


def test_component_count():
    lab = np.array([[0, 0, 1], [1, 0, 1], [2, 2, 0]])
    # leaf 0 is one diagonal chain, leaf 1 has two pieces, leaf 2 one
    assert component_count(lab) == 1 + 2 + 1
