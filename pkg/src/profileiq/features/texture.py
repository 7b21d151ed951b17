"""Texture features (56 dims) computed at the canonical working size.

Layout: gray entropy (1), block sharpness statistics (4), Haar wavelet
detail energies (12), Tamura coarseness/contrast/directionality (3), GLCM
properties per HSV channel (12), global oriented-energy summary (24).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..images import bilinear_resize, rgb_to_hsv, to_gray, validate_image
from .gabor import N_GLOBAL_SCALES, N_ORIENTATIONS, oriented_energy_maps

WORKING_SIZE = 256
GRAY_BINS = 256
GLCM_LEVELS = 64
SHARPNESS_GRID = 4
COARSENESS_OCTAVES = 5
COARSENESS_NOISE_FLOOR = 1e-9
DIRECTION_BINS = 16
DIRECTION_MAG_THRESHOLD = 1e-4

_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def gray_entropy(gray: np.ndarray, bins: int = GRAY_BINS) -> float:
    """Shannon entropy (bits) of the gray-level histogram."""
    idx = np.minimum((gray * bins).astype(np.intp), bins - 1)
    counts = np.bincount(idx.ravel(), minlength=bins)
    p = counts[counts > 0] / idx.size
    return float(-(p * np.log2(p)).sum() + 0.0)


def sharpness_stats(gray: np.ndarray, grid: int = SHARPNESS_GRID) -> np.ndarray:
    """mean/var/min/max of per-block mean absolute Laplacian."""
    lap = np.abs(ndimage.convolve(gray, _LAPLACIAN, mode="reflect"))
    h, w = lap.shape
    bh, bw = h // grid, w // grid
    blocks = lap[: bh * grid, : bw * grid].reshape(grid, bh, grid, bw)
    means = blocks.mean(axis=(1, 3)).ravel()
    return np.array([means.mean(), means.var(), means.min(), means.max()])


def _haar_level(a: np.ndarray):
    root2 = np.sqrt(2.0)
    lo = (a[:, 0::2] + a[:, 1::2]) / root2
    hi = (a[:, 0::2] - a[:, 1::2]) / root2
    ll = (lo[0::2, :] + lo[1::2, :]) / root2
    lh = (lo[0::2, :] - lo[1::2, :]) / root2
    hl = (hi[0::2, :] + hi[1::2, :]) / root2
    hh = (hi[0::2, :] - hi[1::2, :]) / root2
    return ll, (lh, hl, hh)


def wavelet_energies(channel: np.ndarray, levels: int = 3) -> np.ndarray:
    """Mean absolute Haar detail coefficients per level."""
    out = np.empty(levels)
    approx = channel
    for lv in range(levels):
        approx, details = _haar_level(approx)
        out[lv] = np.mean([np.abs(d).mean() for d in details])
    return out


def tamura_coarseness(gray: np.ndarray, octaves: int = COARSENESS_OCTAVES) -> float:
    """Mean best-scale window size over the central region."""
    n = gray.shape[0]
    margin = 2 ** (octaves - 1) * 2
    out = n - 2 * margin + 1
    if out <= 0:
        raise ValueError("image too small for coarseness octaves")
    integral = np.zeros((n + 1, n + 1))
    integral[1:, 1:] = gray.cumsum(axis=0).cumsum(axis=1)

    best_e = np.full((out, out), -1.0)
    best_s = np.full((out, out), 1.0)
    for k in range(1, octaves + 1):
        h = 2 ** (k - 1)
        side = 2 * h
        means = (
            integral[side:, side:]
            - integral[:-side, side:]
            - integral[side:, :-side]
            + integral[:-side, :-side]
        ) / float(side * side)

        # means[a, b] is the window with top-left (a, b); its center is
        # (a + h, b + h). E compares windows displaced by +-h around a pixel.
        rows = slice(margin - h, margin - h + out)
        e_h = np.abs(
            means[rows, margin : margin + out]
            - means[rows, margin - 2 * h : margin - 2 * h + out]
        )
        cols = slice(margin - h, margin - h + out)
        e_v = np.abs(
            means[margin : margin + out, cols]
            - means[margin - 2 * h : margin - 2 * h + out, cols]
        )
        e = np.maximum(e_h, e_v)
        # integral-image cancellation leaves ~1e-12 noise on flat regions
        e[e < COARSENESS_NOISE_FLOOR] = 0.0
        better = e > best_e
        best_e[better] = e[better]
        best_s[better] = float(2**k)
    return float(best_s.mean())


def tamura_contrast(gray: np.ndarray) -> float:
    """sigma / kurtosis^(1/4); 0 for a flat image."""
    mu = gray.mean()
    centered = gray - mu
    var = (centered**2).mean()
    if var <= 0.0:
        return 0.0
    kurt = (centered**4).mean() / (var * var)
    return float(np.sqrt(var) / kurt**0.25)


def tamura_directionality(gray: np.ndarray, bins: int = DIRECTION_BINS) -> float:
    """Concentration of the gradient-orientation histogram around its peak.

    1 means all gradient energy at one orientation; 0 means no oriented
    structure at all (flat image).
    """
    gx = ndimage.prewitt(gray, axis=1, mode="reflect")
    gy = ndimage.prewitt(gray, axis=0, mode="reflect")
    mag = (np.abs(gx) + np.abs(gy)) / 2.0
    keep = mag > DIRECTION_MAG_THRESHOLD
    if not keep.any():
        return 0.0
    theta = np.mod(np.arctan2(gy[keep], gx[keep]), np.pi)
    idx = np.minimum((theta / np.pi * bins).astype(np.intp), bins - 1)
    hist = np.bincount(idx, minlength=bins).astype(np.float64)
    hist /= hist.sum()
    centers = (np.arange(bins) + 0.5) * np.pi / bins
    peak = centers[int(hist.argmax())]
    delta = np.abs(centers - peak)
    delta = np.minimum(delta, np.pi - delta)
    spread = float((delta**2 * hist).sum())
    return 1.0 - (4.0 / np.pi**2) * spread


def glcm_properties(channel: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    """(contrast, correlation, energy, homogeneity) with symmetric
    co-occurrence accumulation over the (0,1) and (1,0) offsets."""
    q = np.minimum((channel * levels).astype(np.intp), levels - 1)
    a = q[:, :-1].ravel()
    b = q[:, 1:].ravel()
    c = q[:-1, :].ravel()
    d = q[1:, :].ravel()
    codes = np.concatenate([a * levels + b, b * levels + a, c * levels + d, d * levels + c])
    p = np.bincount(codes, minlength=levels * levels).astype(np.float64)
    p = p.reshape(levels, levels) / p.sum()

    i = np.arange(levels, dtype=np.float64)
    marginal = p.sum(axis=1)
    mu = float((i * marginal).sum())
    var = float(((i - mu) ** 2 * marginal).sum())
    diff = i[:, None] - i[None, :]
    contrast = float((p * diff**2).sum())
    energy = float((p * p).sum())
    homogeneity = float((p / (1.0 + diff**2)).sum())
    if var <= 0.0:
        correlation = 0.0
    else:
        correlation = float((p * (i[:, None] - mu) * (i[None, :] - mu)).sum() / var)
    return np.array([contrast, correlation, energy, homogeneity])


def _texture_from_parts(hsv: np.ndarray, gray: np.ndarray, energy_maps: np.ndarray) -> np.ndarray:
    values = [gray_entropy(gray)]
    values.extend(sharpness_stats(gray))
    per_channel = [wavelet_energies(hsv[..., ch]) for ch in range(3)]
    for energies in per_channel:
        values.extend(energies)
    for energies in per_channel:
        values.append(energies.sum())
    values.append(tamura_coarseness(gray))
    values.append(tamura_contrast(gray))
    values.append(tamura_directionality(gray))
    for ch in range(3):
        values.extend(glcm_properties(hsv[..., ch]))
    global_energy = energy_maps[:N_GLOBAL_SCALES].mean(axis=(2, 3))
    values.extend(global_energy.reshape(N_GLOBAL_SCALES * N_ORIENTATIONS))
    return np.asarray(values, dtype=np.float64)


def texture_features(img: np.ndarray, working_size: int = WORKING_SIZE) -> np.ndarray:
    """All 56 texture dims for one image."""
    img = validate_image(img)
    resized = bilinear_resize(img, working_size, working_size)
    hsv = rgb_to_hsv(resized)
    gray = to_gray(resized)
    return _texture_from_parts(hsv, gray, oriented_energy_maps(gray))
