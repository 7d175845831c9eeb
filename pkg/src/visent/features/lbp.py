"""Local binary pattern texture histogram (8 neighbours, radius 1)."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..tensor import as_image, to_gray
from .config import DescriptorConfig

# Clockwise from east in image coordinates (rows grow downward).
NEIGHBOR_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))


def transitions(code: int, bits: int = 8) -> int:
    """Number of circular 0/1 changes in a ``bits``-bit pattern."""
    rotated = (code >> 1) | ((code & 1) << (bits - 1))
    return bin(code ^ rotated).count("1")


@lru_cache(maxsize=None)
def bin_lookup(mode: str, bits: int = 8) -> np.ndarray:
    """Map each raw pattern code to its histogram bin for ``mode``."""
    codes = range(2 ** bits)
    if mode == "full":
        return np.arange(2 ** bits)
    if mode == "riu2":
        return np.array([bin(c).count("1") if transitions(c, bits) <= 2 else bits + 1 for c in codes])
    if mode == "uniform":
        uniform = [c for c in codes if transitions(c, bits) <= 2]
        table = np.full(2 ** bits, len(uniform))
        table[uniform] = np.arange(len(uniform))
        return table
    raise ValueError(f"unknown LBP mode {mode!r}")


def lbp_codes(gray: np.ndarray) -> np.ndarray:
    """Raw pattern code of every interior pixel (``neighbour >= centre`` sets a bit)."""
    h, w = gray.shape
    centre = gray[1:h - 1, 1:w - 1]
    codes = np.zeros(centre.shape, dtype=np.int64)
    for bit, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        neigh = gray[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (neigh >= centre).astype(np.int64) << bit
    return codes


def lbp(img, config: DescriptorConfig = DescriptorConfig()) -> np.ndarray:
    img = as_image(img)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"LBP needs at least a 3x3 image, got {img.shape[:2]}")
    codes = lbp_codes(to_gray(img))
    table = bin_lookup(config.lbp_mode, config.lbp_neighbors)
    hist = np.bincount(table[codes].ravel(), minlength=config.lbp_dim).astype(np.float64)
    return (hist / hist.sum()).astype(np.float32)
