"""Hand-engineered baseline descriptors."""
from .bow import Codebook, bow_spatial_pyramid, dense_patch_descriptors, load_codebook, save_codebook, train_codebook
from .color import rgb_histogram
from .config import DescriptorConfig
from .gist import gabor_bank, gist
from .lbp import lbp
from .lowlevel import concat_lowlevel, lowlevel_layout

__all__ = [
    "Codebook", "DescriptorConfig", "bow_spatial_pyramid", "concat_lowlevel", "dense_patch_descriptors",
    "gabor_bank", "gist", "lbp", "load_codebook", "lowlevel_layout", "rgb_histogram", "save_codebook",
    "train_codebook",
]
