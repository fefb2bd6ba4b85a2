import numpy as np
import pytest

from scrf.synth import (
    HALF_PLANE,
    SynthSpec,
    checkerboard,
    generate,
    region_boundary,
    region_mask,
    step_image,
)


def test_default_circle():
    spec = SynthSpec()
    stack, boundary = generate(spec)
    assert stack.shape == (64, 64, 1)
    region = region_mask(spec)
    expected_area = np.pi * (0.3 * 64) ** 2
    assert abs(region.sum() - expected_area) / expected_area < 0.03
    assert np.array_equal(boundary, region_boundary(region))
    # boundary is a two-pixel band straddling the circle
    assert boundary[region].any() and boundary[~region].any()


def test_regions_share_mean_but_not_modes():
    stack, _ = generate(SynthSpec(seed=7))
    region = region_mask(SynthSpec())
    inside, outside = stack[region, 0], stack[~region, 0]
    assert abs(inside.mean() - 0.5) < 0.03 and abs(outside.mean() - 0.7) < 0.03
    # four separated modes: the two regions interleave in intensity
    hist, _ = np.histogram(np.concatenate([inside, outside]), bins=[0, 0.35, 0.6, 0.85, 1.2])
    assert np.all(hist > 0)


def test_seeded():
    a, _ = generate(SynthSpec(seed=3))
    b, _ = generate(SynthSpec(seed=3))
    c, _ = generate(SynthSpec(seed=4))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_half_plane():
    spec = SynthSpec(size=10, shape=HALF_PLANE)
    assert region_mask(spec)[:, :5].all() and not region_mask(spec)[:, 5:].any()
    assert generate(spec)[1][:, 4:6].all()


@pytest.mark.parametrize("kw", [
    dict(size=1), dict(shape="square"), dict(radius_fraction=0.6),
    dict(inside_gmm=((0.5, 0.0, 1.0),)), dict(outside_gmm=((0.5, 0.1, 0.7),)),
])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        SynthSpec(**kw)


def test_helpers():
    cb = checkerboard(4)
    assert cb.sum() == 8 and cb[0, 1] and not cb[0, 0]
    assert step_image(4).tolist()[0] == [0, 0, 1, 1]
    assert "radius_fraction = 0.3" in SynthSpec().to_text()
