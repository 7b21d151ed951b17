"""Local block features (4,016 dims) on the 4x4 grid of the working image.

Per block: 32-bin HSV colour histogram (512 total), 59-bin uniform LBP with
8 neighbours at radius 2 (944), 32-dim oriented-energy summary (512), and a
128-dim aggregated dense gradient-orientation descriptor (2048). Histogram
blocks are L1-normalized; an all-zero descriptor block stays zero.
"""

from __future__ import annotations

import numpy as np

from ..images import bilinear_resize, rgb_to_hsv, to_gray, validate_image
from .gabor import N_BLOCK_SCALES, N_ORIENTATIONS, oriented_energy_maps
from .schema import BLOCK_GRID

WORKING_SIZE = 256

HIST_HUE_BINS = 8
HIST_SAT_SPLIT = 0.5
HIST_VAL_SPLIT = 0.5
HIST_BINS = 32

LBP_POINTS = 8
LBP_RADIUS = 2
LBP_BINS = 59

SIFT_STEP = 8
SIFT_CELL = 8
SIFT_SPATIAL = 4
SIFT_ORIENTATIONS = 8
SIFT_DIMS = 128


def _circular_transitions(code: int, points: int = LBP_POINTS) -> int:
    bits = [(code >> k) & 1 for k in range(points)]
    return sum(bits[k] != bits[(k + 1) % points] for k in range(points))


def _build_uniform_lut() -> np.ndarray:
    """Map 8-bit codes to 59 bins: uniform codes in ascending order, then
    one catch-all bin for the non-uniform rest."""
    lut = np.empty(256, dtype=np.intp)
    uniform = [c for c in range(256) if _circular_transitions(c) <= 2]
    index = {c: i for i, c in enumerate(uniform)}
    for c in range(256):
        lut[c] = index.get(c, len(uniform))
    assert len(uniform) == LBP_BINS - 1
    return lut


_UNIFORM_LUT = _build_uniform_lut()

#: Bin that a flat neighbourhood (all neighbours equal) falls into.
ALL_ONES_BIN = int(_UNIFORM_LUT[255])


def _bilinear_sample(padded: np.ndarray, dy: float, dx: float, size: int, pad: int) -> np.ndarray:
    """Sample padded[pad+y+dy, pad+x+dx] for every (y, x) of the image."""
    y0 = int(np.floor(dy))
    x0 = int(np.floor(dx))
    fy = dy - y0
    fx = dx - x0
    base_y = pad + y0
    base_x = pad + x0

    def window(oy, ox):
        return padded[base_y + oy : base_y + oy + size, base_x + ox : base_x + ox + size]

    if fy == 0.0 and fx == 0.0:
        return window(0, 0)
    # lerp as a + w*(b - a): exactly value-preserving where neighbours agree
    a = window(0, 0)
    b = window(0, 1)
    c = window(1, 0)
    d = window(1, 1)
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    return top + (bot - top) * fy


def lbp_code_map(gray: np.ndarray, radius: int = LBP_RADIUS, points: int = LBP_POINTS) -> np.ndarray:
    """Uniform-LBP bin index per pixel, reflect-padded at the borders."""
    size = gray.shape[0]
    padded = np.pad(gray, radius, mode="reflect")
    codes = np.zeros(gray.shape, dtype=np.intp)
    for k in range(points):
        angle = 2.0 * np.pi * k / points
        dx = radius * np.cos(angle)
        dy = radius * np.sin(angle)
        # snap near-integer offsets so axis-aligned samples are exact
        if abs(dx - round(dx)) < 1e-9:
            dx = float(round(dx))
        if abs(dy - round(dy)) < 1e-9:
            dy = float(round(dy))
        neighbour = _bilinear_sample(padded, dy, dx, size, radius)
        codes |= (neighbour >= gray).astype(np.intp) << k
    return _UNIFORM_LUT[codes]


def _block_views(arr: np.ndarray, grid: int = BLOCK_GRID):
    size = arr.shape[0]
    step = size // grid
    for by in range(grid):
        for bx in range(grid):
            yield arr[by * step : (by + 1) * step, bx * step : (bx + 1) * step]


def colour_hist_blocks(hsv: np.ndarray, grid: int = BLOCK_GRID) -> np.ndarray:
    """Per-block 32-bin quantized HSV histogram, L1-normalized."""
    h = np.minimum((hsv[..., 0] * HIST_HUE_BINS).astype(np.intp), HIST_HUE_BINS - 1)
    s = (hsv[..., 1] >= HIST_SAT_SPLIT).astype(np.intp)
    v = (hsv[..., 2] >= HIST_VAL_SPLIT).astype(np.intp)
    codes = h * 4 + s * 2 + v
    out = []
    for block in _block_views(codes, grid):
        counts = np.bincount(block.ravel(), minlength=HIST_BINS).astype(np.float64)
        out.append(counts / block.size)
    return np.concatenate(out)


def lbp_blocks(gray: np.ndarray, grid: int = BLOCK_GRID) -> np.ndarray:
    """Per-block histogram of uniform-LBP bins, L1-normalized."""
    codes = lbp_code_map(gray)
    out = []
    for block in _block_views(codes, grid):
        counts = np.bincount(block.ravel(), minlength=LBP_BINS).astype(np.float64)
        out.append(counts / block.size)
    return np.concatenate(out)


def gist_blocks(energy_maps: np.ndarray, grid: int = BLOCK_GRID) -> np.ndarray:
    """Per-block mean of every scale x orientation energy map (32 dims)."""
    n_scales, n_orient, size, _ = energy_maps.shape
    step = size // grid
    pooled = energy_maps.reshape(n_scales * n_orient, grid, step, grid, step).mean(axis=(2, 4))
    # (32, grid, grid) -> blocks row-major, each with its 32 channel means
    return pooled.transpose(1, 2, 0).reshape(-1)


def _orientation_maps(gray: np.ndarray) -> np.ndarray:
    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), 2.0 * np.pi)
    bins = np.minimum(
        (theta / (2.0 * np.pi / SIFT_ORIENTATIONS)).astype(np.intp), SIFT_ORIENTATIONS - 1
    )
    maps = np.zeros((SIFT_ORIENTATIONS,) + gray.shape)
    for b in range(SIFT_ORIENTATIONS):
        maps[b] = np.where(bins == b, mag, 0.0)
    return maps


def dense_sift_blocks(gray: np.ndarray, grid: int = BLOCK_GRID) -> np.ndarray:
    """Per-block mean of dense 128-dim gradient-orientation descriptors.

    Descriptors sit on a fixed grid (step 8) with a 32x32 support of 4x4
    cells of 8x8 pixels, hard-binned into 8 orientations and aggregated by
    the descriptor's centre block. Each block vector is L1-normalized when
    it carries any gradient mass.
    """
    size = gray.shape[0]
    half = SIFT_CELL * SIFT_SPATIAL // 2  # 16
    maps = _orientation_maps(gray)

    integral = np.zeros((SIFT_ORIENTATIONS, size + 1, size + 1))
    integral[:, 1:, 1:] = maps.cumsum(axis=1).cumsum(axis=2)

    def cell_sums(top: np.ndarray, left: np.ndarray) -> np.ndarray:
        """(n_centers, n_centers, 8) sums of the 8x8 cell at (top, left)."""
        t = top[:, None]
        l = left[None, :]
        s = SIFT_CELL
        return (
            integral[:, t + s, l + s]
            - integral[:, t, l + s]
            - integral[:, t + s, l]
            + integral[:, t, l]
        ).transpose(1, 2, 0)

    centers = np.arange(half, size - half + 1, SIFT_STEP)
    tops = centers - half
    descriptors = np.empty((len(centers), len(centers), SIFT_DIMS))
    d = 0
    for cy in range(SIFT_SPATIAL):
        row = tops + cy * SIFT_CELL
        for cx in range(SIFT_SPATIAL):
            col = tops + cx * SIFT_CELL
            descriptors[:, :, d : d + SIFT_ORIENTATIONS] = cell_sums(row, col)
            d += SIFT_ORIENTATIONS
    assert d == SIFT_DIMS

    step = size // grid
    block_of = np.minimum(centers // step, grid - 1)
    out = np.zeros((grid, grid, SIFT_DIMS))
    for by in range(grid):
        for bx in range(grid):
            sel = descriptors[np.ix_(block_of == by, block_of == bx)]
            if sel.size == 0:
                continue
            vec = sel.reshape(-1, SIFT_DIMS).mean(axis=0)
            total = vec.sum()
            out[by, bx] = vec / total if total > 0 else vec
    return out.reshape(-1)


def _local_from_parts(hsv: np.ndarray, gray: np.ndarray, energy_maps: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [
            colour_hist_blocks(hsv),
            lbp_blocks(gray),
            gist_blocks(energy_maps),
            dense_sift_blocks(gray),
        ]
    )


def local_features(img: np.ndarray, working_size: int = WORKING_SIZE) -> np.ndarray:
    """All 4,016 local dims for one image."""
    img = validate_image(img)
    resized = bilinear_resize(img, working_size, working_size)
    hsv = rgb_to_hsv(resized)
    gray = to_gray(resized)
    return _local_from_parts(hsv, gray, oriented_energy_maps(gray))
