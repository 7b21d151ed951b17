"""Composition features (5 dims) computed on the original image.

Layout: edge-pixel ratio, region count, mean region size in pixels,
horizontal symmetry, vertical symmetry.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..images import mirror_horizontal, mirror_vertical, rgb_to_hsv, to_gray, validate_image
from .color import classify_colour_names
from .schema import COLOUR_NAMES

EDGE_THRESHOLD_FRACTION = 0.1
MIN_REGION_FRACTION = 0.005

# 4-connectivity: diagonal contact does not merge regions, so a tiling of
# alternating colours counts every tile separately.
_CONNECTIVITY = ndimage.generate_binary_structure(2, 1)


def edge_pixel_ratio(gray: np.ndarray) -> float:
    """Fraction of pixels whose Sobel magnitude exceeds 0.1 of the max."""
    gx = ndimage.sobel(gray, axis=1, mode="reflect")
    gy = ndimage.sobel(gray, axis=0, mode="reflect")
    mag = np.hypot(gx, gy)
    return float((mag > EDGE_THRESHOLD_FRACTION * mag.max()).mean())


def colour_regions(hsv: np.ndarray) -> tuple[int, float]:
    """(count, mean size) of colour-name regions covering >= 0.5% of area."""
    labels = classify_colour_names(hsv)
    area = labels.size
    sizes = []
    largest = 0
    for name_idx in range(len(COLOUR_NAMES)):
        mask = labels == name_idx
        if not mask.any():
            continue
        comp, n_comp = ndimage.label(mask, structure=_CONNECTIVITY)
        counts = np.bincount(comp.ravel())[1:]
        largest = max(largest, int(counts.max()))
        sizes.extend(int(c) for c in counts if c >= MIN_REGION_FRACTION * area)
    if not sizes:
        sizes = [largest]
    return len(sizes), float(np.mean(sizes))


def symmetry_scores(img: np.ndarray) -> tuple[float, float]:
    """(horizontal, vertical) mirror symmetry; 1 means exact symmetry."""
    horiz = 1.0 - float(np.abs(img - mirror_horizontal(img)).mean())
    vert = 1.0 - float(np.abs(img - mirror_vertical(img)).mean())
    return horiz, vert


def composition_features(img: np.ndarray, hsv: np.ndarray | None = None) -> np.ndarray:
    img = validate_image(img)
    if hsv is None:
        hsv = rgb_to_hsv(img)
    count, mean_size = colour_regions(hsv)
    horiz, vert = symmetry_scores(img)
    return np.array(
        [edge_pixel_ratio(to_gray(img)), float(count), mean_size, horiz, vert],
        dtype=np.float64,
    )
