"""Reading and writing contour, label and ground-truth raster files."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .image import ImageFormatError


def write_u16_png(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    Image.fromarray(arr.astype(np.uint16)).save(path)


def write_contour(path, contour: np.ndarray) -> None:
    """Quantize a [0, 1] map to 16 bits; ``.pgm`` paths are written as 16-bit PGM."""
    q = np.round(np.clip(contour, 0.0, 1.0) * 65535).astype(np.uint16)
    if str(path).lower().endswith(".pgm"):
        h, w = q.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n65535\n".encode())
            fh.write(q.astype(">u2").tobytes())
    else:
        write_u16_png(path, q)


def read_contour(path) -> np.ndarray:
    """Read a grayscale contour image back into [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im)
        mode = im.mode
    if arr.ndim == 3:
        arr = arr[:, :, :3].mean(axis=2)
    if mode.startswith("I;16") or mode == "I" or arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    return arr.astype(np.float64) / 255.0


def write_binary_png(path, mask: np.ndarray) -> None:
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path)


def read_boundary(path) -> np.ndarray:
    """Boundary PNG (or a BSDS ``.seg`` file) to a boolean map."""
    if str(path).lower().endswith(".seg"):
        return seg_boundary(read_seg(path))
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim == 3:
        arr = arr[:, :, :3].max(axis=2)
    return arr > 0


def write_labels(path, labels: np.ndarray, names: dict | None = None) -> None:
    """16-bit label PNG plus a ``<path>.txt`` sidecar mapping ids to names."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 65535:
        raise ValueError("labels must fit in 16 bits")
    write_u16_png(path, labels)
    names = names or {}
    ids = np.unique(labels)
    with open(str(path) + ".txt", "w") as fh:
        for i in ids:
            fh.write(f"{int(i)} {names.get(int(i), '')}".rstrip() + "\n")


def read_labels(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im).astype(np.int64)


def read_seg(path) -> np.ndarray:
    """Parse a BSDS300 ``.seg`` human segmentation into a label map."""
    lines = Path(path).read_text().splitlines()
    header = {}
    i = 0
    while i < len(lines) and lines[i].strip() != "data":
        parts = lines[i].split(None, 1)
        if len(parts) == 2:
            header[parts[0]] = parts[1].strip()
        i += 1
    try:
        w, h = int(header["width"]), int(header["height"])
    except KeyError as exc:
        raise ImageFormatError(f"{path}: missing {exc.args[0]} in .seg header") from exc
    labels = np.full((h, w), -1, dtype=np.int64)
    for line in lines[i + 1:]:
        if not line.strip():
            continue
        s, r, c1, c2 = (int(v) for v in line.split())
        labels[r, c1:c2 + 1] = s
    if np.any(labels < 0):
        raise ImageFormatError(f"{path}: .seg file does not cover every pixel")
    return labels


def seg_boundary(labels: np.ndarray) -> np.ndarray:
    """One-pixel boundaries: pixels whose right or lower neighbour has another label."""
    labels = np.asarray(labels)
    out = np.zeros(labels.shape, dtype=bool)
    out[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    out[:-1, :] |= labels[:-1, :] != labels[1:, :]
    return out
