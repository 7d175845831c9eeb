"""CNN inference: layer kernels, topology files, weights and feature taps."""
from .forward import DEFAULT_MEANS, extract_features, forward
from .layers import conv_forward, fc_forward, im2col, lrn, max_pool, relu, softmax
from .spec import LayerSpec, NetworkSpec, SpecError, canonical_network, format_network, load_network, parse_network
from .weights import FormatError, WeightStore, load_weights, random_weights, save_weights

__all__ = [
    "DEFAULT_MEANS", "FormatError", "LayerSpec", "NetworkSpec", "SpecError", "WeightStore",
    "canonical_network", "conv_forward", "extract_features", "fc_forward", "format_network",
    "forward", "im2col", "load_network", "load_weights", "lrn", "max_pool", "parse_network",
    "random_weights", "relu", "save_weights", "softmax",
]
