"""Frequency-domain Gabor filter bank shared by global and block GIST.

Filters are single-lobe polar Gaussians in the frequency plane: a radial
Gaussian around the scale's center frequency times an angular Gaussian
around the orientation. The magnitude of the filtered image is the local
oriented-energy map.
"""

from __future__ import annotations

import numpy as np
from functools import lru_cache

N_ORIENTATIONS = 8
N_BLOCK_SCALES = 4
N_GLOBAL_SCALES = 3
ANGULAR_SIGMA = np.pi / 8.0


def scale_frequencies(size: int, n_scales: int) -> tuple[float, ...]:
    """Center frequencies in cycles/image: size/4, size/8, ..."""
    return tuple(size / float(2 ** (s + 2)) for s in range(n_scales))


@lru_cache(maxsize=4)
def gabor_transfer_bank(size: int, n_scales: int = N_BLOCK_SCALES) -> np.ndarray:
    """(n_scales, 8, size, size) transfer functions, DC removed."""
    f = np.fft.fftfreq(size) * size
    fx = f[None, :]
    fy = f[:, None]
    r = np.hypot(fx, fy)
    theta = np.arctan2(fy, fx)

    bank = np.empty((n_scales, N_ORIENTATIONS, size, size))
    for si, f0 in enumerate(scale_frequencies(size, n_scales)):
        sigma_r = f0 / 2.0
        radial = np.exp(-((r - f0) ** 2) / (2.0 * sigma_r**2))
        for oi in range(N_ORIENTATIONS):
            phi = oi * np.pi / N_ORIENTATIONS
            dtheta = np.angle(np.exp(1j * (theta - phi)))
            g = radial * np.exp(-(dtheta**2) / (2.0 * ANGULAR_SIGMA**2))
            g[0, 0] = 0.0
            bank[si, oi] = g
    return bank


def oriented_energy_maps(gray: np.ndarray, n_scales: int = N_BLOCK_SCALES) -> np.ndarray:
    """(n_scales, 8, H, W) Gabor magnitude maps of a square gray image."""
    size = gray.shape[0]
    if gray.shape[0] != gray.shape[1]:
        raise ValueError("oriented_energy_maps expects a square input")
    spectrum = np.fft.fft2(gray)
    bank = gabor_transfer_bank(size, n_scales)
    maps = np.empty((n_scales, N_ORIENTATIONS, size, size))
    for si in range(n_scales):
        for oi in range(N_ORIENTATIONS):
            maps[si, oi] = np.abs(np.fft.ifft2(spectrum * bank[si, oi]))
    return maps
