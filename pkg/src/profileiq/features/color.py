"""Colour features (22 dims) computed on the original image.

Layout: HSV statistics (5), brightness/saturation emotion coordinates (3),
colourfulness (1), colour-name fractions (11), dark channel (1), colour
sensitivity (1).
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import minimum_filter

from ..images import rgb_to_hsv, validate_image
from .schema import COLOUR_NAMES

# Emotion coordinates as linear combinations of mean value and mean
# saturation (brightness/saturation pleasure-arousal-dominance model).
VALENCE_COEF = (0.69, 0.22)
AROUSAL_COEF = (-0.31, 0.60)
DOMINANCE_COEF = (-0.76, 0.32)

DARK_CHANNEL_WINDOW = 15
SENSITIVITY_HUE_BINS = 16

# Colour-name partition thresholds (HSV, hue in degrees). Every pixel maps
# to exactly one of the 11 basic terms, so the fractions sum to 1.
_BLACK_V = 0.15
_ACHROMATIC_S = 0.12
_WHITE_V = 0.80
_RED_HUE_HI = 14.0
_RED_HUE_LO = 345.0
_ORANGE_HUE = 45.0
_YELLOW_HUE = 70.0
_GREEN_HUE = 160.0
_BLUE_HUE = 250.0
_PURPLE_HUE = 290.0
_BROWN_V = 0.60
_PINK_RED_V = 0.75
_PINK_RED_S = 0.50
_PINK_MAGENTA_V = 0.60


def hue_circular_variance(h: np.ndarray) -> float:
    """1 - mean resultant length of hue angles; 0 for a single hue."""
    theta = h * (2.0 * np.pi)
    c = np.cos(theta).mean()
    s = np.sin(theta).mean()
    return float(1.0 - np.hypot(c, s))


def colourfulness(img: np.ndarray) -> float:
    """Opponent-channel colour diversity (Hasler-Suesstrunk)."""
    rg = img[..., 0] - img[..., 1]
    yb = 0.5 * (img[..., 0] + img[..., 1]) - img[..., 2]
    sigma = np.hypot(rg.std(), yb.std())
    mu = np.hypot(rg.mean(), yb.mean())
    return float(sigma + 0.3 * mu)


def classify_colour_names(hsv: np.ndarray) -> np.ndarray:
    """Per-pixel index into COLOUR_NAMES via the fixed HSV partition."""
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    hdeg = h * 360.0
    idx = {name: i for i, name in enumerate(COLOUR_NAMES)}
    out = np.full(h.shape, idx["grey"], dtype=np.intp)

    red_family = (hdeg < _RED_HUE_HI) | (hdeg >= _RED_HUE_LO)
    orange_family = (hdeg >= _RED_HUE_HI) & (hdeg < _ORANGE_HUE)
    magenta_family = (hdeg >= _PURPLE_HUE) & (hdeg < _RED_HUE_LO)

    chromatic = s >= _ACHROMATIC_S
    out[chromatic & red_family] = idx["red"]
    out[chromatic & red_family & (v >= _PINK_RED_V) & (s < _PINK_RED_S)] = idx["pink"]
    out[chromatic & orange_family] = idx["orange"]
    out[chromatic & orange_family & (v < _BROWN_V)] = idx["brown"]
    out[chromatic & (hdeg >= _ORANGE_HUE) & (hdeg < _YELLOW_HUE)] = idx["yellow"]
    out[chromatic & (hdeg >= _YELLOW_HUE) & (hdeg < _GREEN_HUE)] = idx["green"]
    out[chromatic & (hdeg >= _GREEN_HUE) & (hdeg < _BLUE_HUE)] = idx["blue"]
    out[chromatic & (hdeg >= _BLUE_HUE) & (hdeg < _PURPLE_HUE)] = idx["purple"]
    out[chromatic & magenta_family] = idx["purple"]
    out[chromatic & magenta_family & (v >= _PINK_MAGENTA_V)] = idx["pink"]

    achromatic = ~chromatic
    out[achromatic & (v >= _WHITE_V)] = idx["white"]
    out[achromatic & (v < _WHITE_V)] = idx["grey"]
    out[v < _BLACK_V] = idx["black"]
    return out


def colour_name_fractions(hsv: np.ndarray) -> np.ndarray:
    labels = classify_colour_names(hsv)
    counts = np.bincount(labels.ravel(), minlength=len(COLOUR_NAMES))
    return counts.astype(np.float64) / labels.size


def dark_channel_mean(img: np.ndarray, window: int = DARK_CHANNEL_WINDOW) -> float:
    """Mean of the min-filtered per-pixel RGB minimum; low means clear."""
    per_pixel_min = img.min(axis=-1)
    filtered = minimum_filter(per_pixel_min, size=window, mode="nearest")
    return float(filtered.mean())


def colour_sensitivity(hsv: np.ndarray, bins: int = SENSITIVITY_HUE_BINS) -> float:
    """Peak of the saturation*value-weighted hue histogram (0 if weightless)."""
    h = hsv[..., 0].ravel()
    w = (hsv[..., 1] * hsv[..., 2]).ravel()
    total = w.sum()
    if total <= 0.0:
        return 0.0
    bin_idx = np.minimum((h * bins).astype(np.intp), bins - 1)
    hist = np.bincount(bin_idx, weights=w, minlength=bins)
    return float(hist.max() / total)


def colour_features(img: np.ndarray, hsv: np.ndarray | None = None) -> np.ndarray:
    """All 22 colour dims for one image."""
    img = validate_image(img)
    if hsv is None:
        hsv = rgb_to_hsv(img)
    s = hsv[..., 1]
    v = hsv[..., 2]
    s_mean = float(s.mean())
    v_mean = float(v.mean())

    values = [
        hue_circular_variance(hsv[..., 0]),
        s_mean,
        v_mean,
        float(s.std()),
        float(v.std()),
        VALENCE_COEF[0] * v_mean + VALENCE_COEF[1] * s_mean,
        AROUSAL_COEF[0] * v_mean + AROUSAL_COEF[1] * s_mean,
        DOMINANCE_COEF[0] * v_mean + DOMINANCE_COEF[1] * s_mean,
        colourfulness(img),
    ]
    values.extend(colour_name_fractions(hsv))
    values.append(dark_channel_mean(img))
    values.append(colour_sensitivity(hsv))
    return np.asarray(values, dtype=np.float64)
