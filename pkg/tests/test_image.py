import math

import numpy as np
import pytest
from PIL import Image
from skimage import data

from scrf.image import (
    ImageFormatError,
    bilateral_filter,
    build_feature_stack,
    lab_to_rgb,
    load_image,
    load_stack,
    rgb_to_lab,
    save_stack,
)


def cie_lab_oracle(rgb):
    """Textbook sRGB -> XYZ (D65) -> L*a*b* for one colour."""
    def lin(c):
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    r, g, b = (lin(c) for c in rgb)
    x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b
    y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b
    z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b
    xn, yn, zn = 0.95047, 1.0, 1.08883

    def f(t):
        d = 6 / 29
        return t ** (1 / 3) if t > d**3 else t / (3 * d * d) + 4 / 29

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def brute_bilateral(img, ss, sr):
    h, w = img.shape
    rad = math.ceil(3 * ss)
    out = np.zeros_like(img)
    for i in range(h):
        for j in range(w):
            num = den = 0.0
            for ii in range(max(0, i - rad), min(h, i + rad + 1)):
                for jj in range(max(0, j - rad), min(w, j + rad + 1)):
                    ws = math.exp(-((ii - i) ** 2 + (jj - j) ** 2) / (2 * ss * ss))
                    wr = 1.0 if math.isinf(sr) else math.exp(-((img[ii, jj] - img[i, j]) ** 2) / (2 * sr * sr))
                    num += ws * wr * img[ii, jj]
                    den += ws * wr
            out[i, j] = num / den
    return out


def _save_png(path, arr):
    Image.fromarray(arr).save(path)


class TestLoadImage:
    def test_white_and_black(self, tmp_path):
        _save_png(tmp_path / "w.png", np.full((2, 2, 3), 255, np.uint8))
        _save_png(tmp_path / "k.png", np.zeros((2, 2, 3), np.uint8))
        assert np.all(load_image(tmp_path / "w.png") == 1.0)
        assert np.all(load_image(tmp_path / "k.png") == 0.0)

    def test_dimensions_and_gray_replication(self, tmp_path):
        gray = (np.arange(481 * 321) % 256).astype(np.uint8).reshape(321, 481)
        _save_png(tmp_path / "g.png", gray)
        img = load_image(tmp_path / "g.png")
        assert img.shape == (321, 481, 3)
        assert np.array_equal(img[:, :, 0], img[:, :, 2])

    def test_ppm_and_jpeg(self, tmp_path):
        arr = np.random.default_rng(0).integers(0, 256, (5, 7, 3)).astype(np.uint8)
        Image.fromarray(arr).save(tmp_path / "a.ppm")
        Image.fromarray(arr).save(tmp_path / "a.jpg")
        assert np.allclose(load_image(tmp_path / "a.ppm"), arr / 255.0)
        assert load_image(tmp_path / "a.jpg").shape == (5, 7, 3)

    def test_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "missing.png")
        (tmp_path / "bad.png").write_bytes(b"not an image at all")
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / "bad.png")


class TestLab:
    def test_white_and_black(self):
        white = rgb_to_lab(np.ones((1, 1, 3)))[0, 0]
        assert white[0] == pytest.approx(100.0, abs=1e-6)
        assert abs(white[1]) < 0.5 and abs(white[2]) < 0.5
        assert np.allclose(rgb_to_lab(np.zeros((1, 1, 3)))[0, 0], 0.0)

    def test_red_against_reference_formulas(self):
        oracle = cie_lab_oracle((1.0, 0.0, 0.0))
        assert np.allclose(oracle, (53.24, 80.09, 67.20), atol=0.1)
        assert np.allclose(rgb_to_lab(np.array([[[1.0, 0.0, 0.0]]]))[0, 0], oracle, atol=0.1)

    def test_matches_oracle_on_random_colours(self, rng):
        cols = rng.random((20, 3))
        got = rgb_to_lab(cols[None, :, :])[0]
        want = np.array([cie_lab_oracle(c) for c in cols])
        assert np.allclose(got, want, atol=0.05)

    def test_round_trip_grid(self):
        g = np.linspace(0, 1, 16)
        grid = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(16, 256, 3)
        assert np.max(np.abs(lab_to_rgb(rgb_to_lab(grid)) - grid)) < 1e-4

    def test_channel_ranges(self, rng):
        lab = rgb_to_lab(rng.random((8, 8, 3)))
        assert lab[..., 0].min() >= 0 and lab[..., 0].max() <= 100
        assert lab[..., 1:].min() >= -128 and lab[..., 1:].max() <= 127

    def test_wrong_channel_count(self):
        with pytest.raises(ValueError):
            rgb_to_lab(np.zeros((2, 2, 4)))


class TestBilateral:
    def test_constant_image(self):
        img = np.full((9, 11, 2), 0.37)
        assert np.allclose(bilateral_filter(img, 2.0, 0.1), 0.37)

    def test_infinite_range_is_gaussian_blur(self):
        img = np.zeros((15, 15))
        img[7, 7] = 1.0
        got = bilateral_filter(img[:, :, None], 1.5, math.inf)[:, :, 0]
        assert np.max(np.abs(got - brute_bilateral(img, 1.5, math.inf))) < 1e-6

    def test_matches_brute_force(self, rng):
        img = rng.random((12, 10))
        got = bilateral_filter(img[:, :, None], 1.0, 0.2)[:, :, 0]
        assert np.allclose(got, brute_bilateral(img, 1.0, 0.2), atol=1e-12)

    def test_step_edge_preserved(self):
        img = np.zeros((16, 16))
        img[:, 8:] = 10.0
        got = bilateral_filter(img[:, :, None], 2.0, 0.5)[:, :, 0]
        ref = brute_bilateral(img, 2.0, 0.5)
        assert np.allclose(got, ref, atol=1e-9)
        far = np.abs(np.arange(16) - 7.5) > 1.5
        assert np.max(np.abs(got[:, far] - img[:, far])) < 0.01 * 10.0

    def test_output_bounded_by_input_range(self, rng):
        img = rng.normal(size=(10, 10, 3))
        out = bilateral_filter(img, 1.0, 0.5)
        for c in range(3):
            assert out[..., c].min() >= img[..., c].min()
            assert out[..., c].max() <= img[..., c].max()

    @pytest.mark.parametrize("ss,sr", [(0, 1), (1, 0), (-1, 1)])
    def test_bad_sigmas(self, ss, sr):
        with pytest.raises(ValueError):
            bilateral_filter(np.zeros((3, 3, 1)), ss, sr)


def _tv(ch):
    return np.abs(np.diff(ch, axis=0)).sum() + np.abs(np.diff(ch, axis=1)).sum()


class TestFeatureStack:
    def test_shape(self, rng):
        out = build_feature_stack(rng.random((13, 17, 3)))
        assert out.shape == (13, 17, 6)

    def test_constant_colour(self):
        img = np.ones((6, 6, 3)) * np.array([0.2, 0.5, 0.7])
        out = build_feature_stack(img)
        assert np.array_equal(out[..., 3:], out[..., :3])

    @pytest.mark.parametrize("name", ["astronaut", "coffee", "chelsea", "rocket", "immunohistochemistry"])
    def test_filtered_l_has_lower_total_variation(self, name):
        img = getattr(data, name)()[::6, ::6] / 255.0
        out = build_feature_stack(img)
        assert _tv(out[..., 3]) <= _tv(out[..., 0])

    def test_deterministic(self, rng):
        img = rng.random((10, 10, 3))
        assert build_feature_stack(img).tobytes() == build_feature_stack(img).tobytes()


def test_stack_cache_round_trip(tmp_path, rng):
    s = rng.random((4, 5, 6))
    save_stack(tmp_path / "a.stack", s)
    raw = (tmp_path / "a.stack").read_bytes()
    assert raw[:4] == b"SCRF"
    assert int.from_bytes(raw[4:8], "little") == 4
    assert len(raw) == 16 + 8 * s.size
    assert np.array_equal(load_stack(tmp_path / "a.stack"), s)
