"""Image loading and the 6-channel Lab + bilateral feature stack.

A channel stack is a plain ``(height, width, channels)`` float64 array.
"""
from __future__ import annotations

import math
import struct
from pathlib import Path

import numba
import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage import color

STACK_MAGIC = b"SCRF"
BILATERAL_SIGMA_SPATIAL = 3.0
BILATERAL_RANGE_FRACTION = 0.1


class ImageFormatError(ValueError):
    """Raised for unreadable or unsupported raster files."""


def check_stack(stack: np.ndarray) -> np.ndarray:
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim == 2:
        stack = stack[:, :, None]
    if stack.ndim != 3 or min(stack.shape) < 1:
        raise ValueError(f"expected a (H, W, C) stack, got shape {stack.shape}")
    if not np.all(np.isfinite(stack)):
        raise ValueError("stack contains non-finite values")
    return stack


def load_image(path) -> np.ndarray:
    """Read a PNG/PPM/JPEG file into an RGB stack scaled to [0, 1].

    Grayscale files are replicated to three channels and alpha is dropped.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                scale = 65535.0 if mode.startswith("I;16") or arr.max() > 255 else 255.0
                arr = arr / scale
            elif mode == "F":
                arr = np.asarray(im, dtype=np.float64)
            else:
                if mode not in ("L", "RGB"):
                    im = im.convert("RGB")
                arr = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return np.clip(arr, 0.0, 1.0)


def rgb_to_lab(stack: np.ndarray) -> np.ndarray:
    """sRGB (D65) in [0, 1] to CIE 1976 L*a*b*."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[2] != 3:
        raise ValueError(f"rgb_to_lab needs 3 channels, got shape {stack.shape}")
    return color.rgb2lab(stack, illuminant="D65", observer="2")


def lab_to_rgb(stack: np.ndarray) -> np.ndarray:
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[2] != 3:
        raise ValueError(f"lab_to_rgb needs 3 channels, got shape {stack.shape}")
    return color.lab2rgb(stack, illuminant="D65", observer="2")


@numba.njit(cache=True, nogil=True)
def _bilateral_channel(img, radius, spatial_w, inv_two_sr2):
    h, w = img.shape
    out = np.empty_like(img)
    for i in range(h):
        for j in range(w):
            center = img[i, j]
            acc = 0.0
            norm = 0.0
            for di in range(-radius, radius + 1):
                ii = i + di
                if ii < 0 or ii >= h:
                    continue
                for dj in range(-radius, radius + 1):
                    jj = j + dj
                    if jj < 0 or jj >= w:
                        continue
                    v = img[ii, jj]
                    d = v - center
                    wt = spatial_w[di + radius, dj + radius] * math.exp(-d * d * inv_two_sr2)
                    acc += wt * v
                    norm += wt
            out[i, j] = acc / norm
    return out


def bilateral_filter(stack: np.ndarray, sigma_spatial: float, sigma_range) -> np.ndarray:
    """Filter each channel independently with a truncated bilateral kernel.

    ``sigma_range`` may be a scalar or one value per channel; ``math.inf``
    turns the filter into a border-renormalized Gaussian blur. The kernel is
    truncated at ``ceil(3 * sigma_spatial)`` and weights are renormalized over
    the neighbours that fall inside the image.
    """
    stack = check_stack(stack)
    if not sigma_spatial > 0:
        raise ValueError("sigma_spatial must be positive")
    sr = np.broadcast_to(np.asarray(sigma_range, dtype=np.float64), (stack.shape[2],))
    if np.any(~(sr > 0)):
        raise ValueError("sigma_range must be positive")
    radius = int(math.ceil(3.0 * sigma_spatial))
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    spatial_w = np.exp(-(offs[:, None] ** 2 + offs[None, :] ** 2) / (2.0 * sigma_spatial**2))
    out = np.empty_like(stack)
    for c in range(stack.shape[2]):
        inv = 0.0 if math.isinf(sr[c]) else 1.0 / (2.0 * sr[c] ** 2)
        chan = np.ascontiguousarray(stack[:, :, c])
        out[:, :, c] = _bilateral_channel(chan, radius, spatial_w, inv)
    # float rounding can leave a convex combination 1 ulp outside the input range
    lo = stack.min(axis=(0, 1))
    hi = stack.max(axis=(0, 1))
    return np.clip(out, lo, hi)


def build_feature_stack(image: np.ndarray) -> np.ndarray:
    """Lab channels followed by their bilateral-filtered copies (6 channels)."""
    image = check_stack(image)
    if image.shape[2] == 1:
        image = np.repeat(image, 3, axis=2)
    lab = rgb_to_lab(image)
    spans = lab.max(axis=(0, 1)) - lab.min(axis=(0, 1))
    filtered = lab.copy()
    active = np.flatnonzero(spans > 0)
    if active.size:
        filtered[:, :, active] = bilateral_filter(
            lab[:, :, active], BILATERAL_SIGMA_SPATIAL, BILATERAL_RANGE_FRACTION * spans[active]
        )
    return np.concatenate([lab, filtered], axis=2)


def save_stack(path, stack: np.ndarray) -> None:
    stack = check_stack(stack)
    h, w, c = stack.shape
    with open(path, "wb") as fh:
        fh.write(STACK_MAGIC + struct.pack("<III", h, w, c))
        fh.write(np.ascontiguousarray(stack, dtype="<f8").tobytes())


def load_stack(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != STACK_MAGIC or len(data) < 16:
        raise ImageFormatError(f"{path}: not a feature-stack cache file")
    h, w, c = struct.unpack("<III", data[4:16])
    body = data[16:]
    if len(body) != 8 * h * w * c:
        raise ImageFormatError(f"{path}: truncated stack payload")
    return np.frombuffer(body, dtype="<f8").reshape(h, w, c).astype(np.float64)
