from __future__ import annotations

import numpy as np

from ..tensor import as_image


def rgb_histogram(img, bins: int = 256) -> np.ndarray:
    """Per-channel intensity histograms, each summing to one, concatenated R, G, B."""
    img = as_image(img)
    if img.shape[2] != 3:
        raise ValueError("rgb_histogram needs a 3-channel image")
    vals = np.clip(img.reshape(-1, 3).astype(np.float64), 0.0, 255.0)
    idx = np.minimum((vals * bins / 256.0).astype(np.intp), bins - 1)
    n = idx.shape[0]
    out = np.empty(3 * bins, dtype=np.float64)
    for c in range(3):
        out[c * bins:(c + 1) * bins] = np.bincount(idx[:, c], minlength=bins) / n
    return out.astype(np.float32)
