from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..tensor import DTYPE, preprocess
from . import layers as L
from .spec import NetworkSpec, SpecError
from .weights import WeightStore

DEFAULT_MEANS = (123.68, 116.78, 103.94)


def _run_layer(layer, x, weights):
    kind = layer.kind
    if kind == "convolution":
        w, b = weights[layer.name]
        return L.conv_forward(x, w, b, layer["stride"], layer["pad"], layer["groups"])
    if kind == "relu":
        return L.relu(x)
    if kind == "lrn":
        return L.lrn(x, layer["n"], layer["k"], layer["alpha"], layer["beta"])
    if kind == "maxpool":
        return L.max_pool(x, layer["window"], layer["stride"])
    if kind == "fullyconnected":
        w, b = weights[layer.name]
        return L.fc_forward(x, w, b)
    return L.softmax(x)


def forward(spec: NetworkSpec, weights: WeightStore, x, taps) -> dict:
    """Run the network on one ``[C, H, W]`` input.

    Returns ``{tap: activation}`` where each activation is the named layer's
    output after its trailing relu/softmax layers. Everything is validated
    before any layer runs.
    """
    taps = list(dict.fromkeys(taps))
    weights.validate(spec)
    stop = {name: spec.tap_index(name) for name in taps}
    x = np.asarray(x, dtype=DTYPE)
    if x.shape != spec.input_shape:
        raise SpecError(f"input shape {x.shape} != network input {spec.input_shape}")

    last = max(stop.values(), default=-1)
    keep = set(stop.values())
    results = {}
    for i, layer in enumerate(spec.layers[:last + 1]):
        x = _run_layer(layer, x, weights)
        if i in keep:
            results[i] = x
    out = {name: results[i] for name, i in stop.items()}
    return out


def extract_features(spec, weights, images, layer, means=DEFAULT_MEANS, threads: int = 1,
                     resize_to: int = 256) -> np.ndarray:
    """Stack the flattened ``layer`` activation of each image into a matrix."""
    weights.validate(spec)
    i = spec.tap_index(layer)
    dim = int(np.prod(spec.output_shapes()[i]))
    crop = spec.input_shape[1]

    def one(item):
        idx, img = item
        try:
            x = preprocess(img, means, resize_to=resize_to, crop=crop)
            return forward(spec, weights, x, [layer])[layer].reshape(-1)
        except Exception as exc:
            raise type(exc)(f"image {idx}: {exc}") from exc

    items = list(enumerate(images))
    if not items:
        return np.zeros((0, dim), dtype=DTYPE)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(item) for item in items]
    return np.stack(rows).astype(DTYPE, copy=False)
