"""Holistic scene descriptor from a bank of frequency-domain Gabor filters."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..tensor import resize_bilinear, to_gray
from .config import DescriptorConfig

# One-octave radial bandwidth (sigma/f0 ratio of a log-Gabor).
_RADIAL_RATIO = 0.55
_HIGHEST_FREQ = 0.25  # cycles per pixel at the finest scale


@lru_cache(maxsize=8)
def gabor_bank(size: int, scales: int, orientations: int) -> np.ndarray:
    """Transfer functions ``[scales * orientations, size, size]``.

    Each filter is a one-sided log-Gabor: Gaussian in log radial frequency
    around ``0.25 / 2**s`` cycles/pixel and Gaussian in angle around
    ``pi * o / orientations``. The DC gain of every filter is exactly zero.
    """
    f = np.fft.fftfreq(size)
    fy, fx = np.meshgrid(f, f, indexing="ij")
    radius = np.hypot(fx, fy)
    theta = np.arctan2(fy, fx)
    radius[0, 0] = 1.0  # placeholder, DC zeroed below
    log_sigma = np.log(_RADIAL_RATIO)
    ang_sigma = 0.6 * np.pi / orientations
    bank = np.empty((scales * orientations, size, size))
    for s in range(scales):
        f0 = _HIGHEST_FREQ / 2 ** s
        radial = np.exp(-np.log(radius / f0) ** 2 / (2 * log_sigma ** 2))
        for o in range(orientations):
            d = np.angle(np.exp(1j * (theta - np.pi * o / orientations)))
            angular = np.exp(-d ** 2 / (2 * ang_sigma ** 2))
            g = radial * angular
            g[0, 0] = 0.0
            bank[s * orientations + o] = g
    bank.setflags(write=False)
    return bank


def gist(img, config: DescriptorConfig = DescriptorConfig()) -> np.ndarray:
    """Mean Gabor magnitude per filter over a ``grid x grid`` partition.

    Layout: scale-major, then orientation, then grid cell in row-major order.
    """
    n = config.gist_size
    gray = to_gray(resize_bilinear(img, n, n)).astype(np.float64)
    pad = n // 4
    padded = np.pad(gray, pad, mode="symmetric")
    bank = gabor_bank(n + 2 * pad, config.gist_scales, config.gist_orientations)
    spectrum = np.fft.fft2(padded)
    resp = np.abs(np.fft.ifft2(spectrum[None] * bank))[:, pad:pad + n, pad:pad + n]

    g = config.gist_grid
    edges = np.linspace(0, n, g + 1).round().astype(int)
    out = np.empty((resp.shape[0], g, g))
    for i in range(g):
        for j in range(g):
            cell = resp[:, edges[i]:edges[i + 1], edges[j]:edges[j + 1]]
            out[:, i, j] = cell.mean(axis=(1, 2))
    return out.reshape(-1).astype(np.float32)
