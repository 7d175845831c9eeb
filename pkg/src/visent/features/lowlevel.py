from __future__ import annotations

import numpy as np

from .bow import Codebook, bow_spatial_pyramid
from .color import rgb_histogram
from .config import DescriptorConfig
from .gist import gist
from .lbp import lbp


def lowlevel_layout(config: DescriptorConfig = DescriptorConfig()) -> dict:
    """``name -> slice`` of each component inside the concatenated vector."""
    sizes = [("histogram", 3 * config.hist_bins), ("gist", config.gist_dim),
             ("lbp", config.lbp_dim), ("bow", config.bow_dim)]
    layout, start = {}, 0
    for name, size in sizes:
        layout[name] = slice(start, start + size)
        start += size
    return layout


def concat_lowlevel(img, codebook: Codebook, config: DescriptorConfig = DescriptorConfig()) -> np.ndarray:
    """Colour histogram, GIST, LBP and pyramid BoW, concatenated in that order."""
    parts = [
        rgb_histogram(img, config.hist_bins),
        gist(img, config),
        lbp(img, config),
        bow_spatial_pyramid(img, codebook, config),
    ]
    return np.concatenate(parts).astype(np.float32)
