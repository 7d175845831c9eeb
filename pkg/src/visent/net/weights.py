"""Named weight blobs for a network, stored in the binary container.

Each parametrised layer ``L`` owns two blobs, ``L.w`` and ``L.b``.
"""
from __future__ import annotations

from collections import OrderedDict
from types import MappingProxyType

import numpy as np

from ..container import FormatError, read_blobs, write_blobs
from .spec import NetworkSpec, SpecError


class WeightStore:
    """Read-only mapping of layer name to ``(weights, bias)``."""

    def __init__(self, blobs=None):
        blobs = OrderedDict(blobs or {})
        for arr in blobs.values():
            arr.setflags(write=False)
        self._blobs = MappingProxyType(blobs)

    @property
    def blobs(self):
        return self._blobs

    def __contains__(self, layer):
        return f"{layer}.w" in self._blobs and f"{layer}.b" in self._blobs

    def __getitem__(self, layer):
        try:
            return self._blobs[f"{layer}.w"], self._blobs[f"{layer}.b"]
        except KeyError:
            raise KeyError(f"no weights for layer {layer!r}") from None

    def __len__(self):
        return len(self._blobs)

    def validate(self, spec: NetworkSpec) -> None:
        for name, (w_shape, b_shape) in spec.weight_shapes().items():
            if name not in self:
                raise SpecError(f"weights missing blob for layer {name!r}")
            w, b = self[name]
            if w.shape != w_shape or b.shape != b_shape:
                raise SpecError(
                    f"layer {name!r}: weight blobs {w.shape}/{b.shape} do not match "
                    f"expected {w_shape}/{b_shape}")

    @classmethod
    def from_layers(cls, layers: dict) -> "WeightStore":
        blobs = OrderedDict()
        for name, (w, b) in layers.items():
            blobs[f"{name}.w"] = np.ascontiguousarray(w, dtype=np.float32)
            blobs[f"{name}.b"] = np.ascontiguousarray(b, dtype=np.float32)
        return cls(blobs)


def load_weights(path) -> WeightStore:
    return WeightStore(read_blobs(path))


def save_weights(path, store: WeightStore) -> None:
    write_blobs(path, store.blobs)


def random_weights(spec: NetworkSpec, seed: int = 0) -> WeightStore:
    """He-initialised weights with zero biases, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    layers = OrderedDict()
    for name, (w_shape, b_shape) in spec.weight_shapes().items():
        fan_in = int(np.prod(w_shape[1:]))
        w = rng.standard_normal(w_shape, dtype=np.float32)
        w *= np.float32(np.sqrt(2.0 / fan_in))
        layers[name] = (w, np.zeros(b_shape, dtype=np.float32))
    return WeightStore.from_layers(layers)


__all__ = ["FormatError", "WeightStore", "load_weights", "random_weights", "save_weights"]
