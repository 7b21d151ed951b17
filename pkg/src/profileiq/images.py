"""Image ingestion and pixel-level primitives.

Images are represented as float64 arrays of shape (height, width, 3) with
RGB channels in [0, 1]. All conversions here are deterministic and free of
global state so feature extraction stays reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import InputError

MIN_SIDE = 32


def load_image(path) -> np.ndarray:
    """Decode a PNG/JPEG file into a validated RGB float array."""
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"cannot decode image {path!r}: {exc}") from exc
    return validate_image(arr)


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check shape, range, and minimum size; returns the array unchanged."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InputError(f"expected HxWx3 RGB array, got shape {img.shape}")
    h, w = img.shape[:2]
    if h == 0 or w == 0:
        raise InputError("degenerate image with zero area")
    if h < MIN_SIDE or w < MIN_SIDE:
        raise InputError(f"image {w}x{h} below minimum size {MIN_SIDE}x{MIN_SIDE}")
    if not np.isfinite(img).all():
        raise InputError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise InputError("channel values must lie in [0, 1]")
    return img


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Vectorized RGB -> HSV with hue in [0, 1).

    Conventions: achromatic pixels (max == min) get hue 0; black pixels
    (value 0) get saturation 0. These fixed conventions keep circular hue
    statistics singularity-free.
    """
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    maxc = np.max(img, axis=-1)
    minc = np.min(img, axis=-1)
    delta = maxc - minc

    h = np.zeros_like(maxc)
    chromatic = delta > 0
    # avoid 0/0; masked out below
    safe = np.where(chromatic, delta, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, h)
    h = np.where((maxc == g) & (g != r), 2.0 + rc - bc, h)
    h = np.where((maxc == b) & (b != r) & (b != g), 4.0 + gc - rc, h)
    h = np.where(chromatic, (h / 6.0) % 1.0, 0.0)

    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    return np.stack([h, s, maxc], axis=-1)


def to_gray(img: np.ndarray) -> np.ndarray:
    """ITU-R BT.601 luma in [0, 1]."""
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize with half-pixel-center bilinear sampling.

    A no-op (same array object) when the size already matches, so
    synthetic images built at the working size are untouched.
    """
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if img.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    # lerp as a + w*(b - a): exactly value-preserving where neighbours agree
    top_left = img[y0][:, x0]
    top = top_left + (img[y0][:, x1] - top_left) * wx
    bot_left = img[y1][:, x0]
    bot = bot_left + (img[y1][:, x1] - bot_left) * wx
    return top + (bot - top) * wy


def mirror_horizontal(img: np.ndarray) -> np.ndarray:
    """Flip left-right (mirror across the vertical axis)."""
    return img[:, ::-1]


def mirror_vertical(img: np.ndarray) -> np.ndarray:
    """Flip top-bottom (mirror across the horizontal axis)."""
    return img[::-1, :]
