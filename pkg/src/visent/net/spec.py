"""Network topology description and its text file format.

A network file holds one record per line as whitespace-separated
``key=value`` pairs; ``#`` starts a comment. The first record declares the
input, every following record declares one layer::

    kind=input shape=3,224,224
    name=conv1 kind=convolution out_channels=96 kernel=11 stride=4 pad=0 groups=1
    name=relu1 kind=relu
    name=norm1 kind=lrn n=5 k=2 alpha=0.0001 beta=0.75
    name=pool1 kind=maxpool window=3 stride=2
    name=fc6 kind=fullyconnected out_features=4096
    name=prob kind=softmax
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from .layers import conv_output_size

KINDS = ("convolution", "relu", "lrn", "maxpool", "fullyconnected", "softmax")
ACTIVATIONS = ("relu", "softmax")

_PARAMS = {
    "convolution": {"out_channels": int, "kernel": int, "stride": int, "pad": int, "groups": int},
    "relu": {},
    "lrn": {"n": int, "k": float, "alpha": float, "beta": float},
    "maxpool": {"window": int, "stride": int},
    "fullyconnected": {"out_features": int},
    "softmax": {},
}
_DEFAULTS = {
    "convolution": {"stride": 1, "pad": 0, "groups": 1},
    "lrn": {"n": 5, "k": 2.0, "alpha": 1e-4, "beta": 0.75},
}


class SpecError(ValueError):
    """Invalid network description."""


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"layer {self.name!r}: unknown kind {self.kind!r}")
        allowed = _PARAMS[self.kind]
        merged = dict(_DEFAULTS.get(self.kind, {}))
        for key, value in self.params.items():
            if key not in allowed:
                raise SpecError(f"layer {self.name!r}: unexpected parameter {key!r}")
            merged[key] = allowed[key](value)
        missing = set(allowed) - set(merged)
        if missing:
            raise SpecError(f"layer {self.name!r}: missing parameters {sorted(missing)}")
        for key in ("out_channels", "kernel", "stride", "groups", "window", "out_features", "n"):
            if key in merged and merged[key] < 1:
                raise SpecError(f"layer {self.name!r}: {key} must be >= 1")
        if merged.get("pad", 0) < 0:
            raise SpecError(f"layer {self.name!r}: pad must be >= 0")
        if self.kind == "lrn" and merged["n"] % 2 == 0:
            raise SpecError(f"layer {self.name!r}: lrn window n must be odd")
        object.__setattr__(self, "params", merged)

    def __getitem__(self, key):
        return self.params[key]

    @property
    def has_weights(self) -> bool:
        return self.kind in ("convolution", "fullyconnected")


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    input_shape: tuple = (3, 224, 224)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        seen = set()
        for layer in self.layers:
            if layer.name in seen:
                raise SpecError(f"duplicate layer name {layer.name!r}")
            seen.add(layer.name)
        self.output_shapes()  # validates the shape chain

    @property
    def names(self) -> list:
        return [layer.name for layer in self.layers]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SpecError(f"no layer named {name!r}") from None

    def output_shapes(self) -> list:
        """Output shape of every layer, raising on an inconsistent chain."""
        shapes = []
        shape = self.input_shape
        prev = "input"
        for layer in self.layers:
            shape = _layer_output_shape(layer, shape, prev)
            shapes.append(shape)
            prev = layer.name
        return shapes

    def input_shapes(self) -> list:
        return [self.input_shape] + self.output_shapes()[:-1]

    def weight_shapes(self) -> dict:
        """``layer name -> (weight shape, bias shape)`` for parametrised layers."""
        out = {}
        for layer, in_shape in zip(self.layers, self.input_shapes()):
            if layer.kind == "convolution":
                k = layer["kernel"]
                c_out = layer["out_channels"]
                out[layer.name] = ((c_out, in_shape[0] // layer["groups"], k, k), (c_out,))
            elif layer.kind == "fullyconnected":
                n_in = 1
                for d in in_shape:
                    n_in *= d
                out[layer.name] = ((layer["out_features"], n_in), (layer["out_features"],))
        return out

    def tap_index(self, name: str) -> int:
        """Index of the layer whose output is reported for tap ``name``.

        A tap yields the post-activation value: the output of the named layer
        after any directly following relu/softmax layers.
        """
        i = self.index(name)
        while i + 1 < len(self.layers) and self.layers[i + 1].kind in ACTIVATIONS:
            i += 1
        return i


def _layer_output_shape(layer: LayerSpec, shape: tuple, prev: str) -> tuple:
    kind = layer.kind
    if kind in ("relu", "softmax"):
        if kind == "softmax" and len(shape) != 1:
            raise SpecError(f"softmax {layer.name!r} after {prev!r} needs a flat input, got {shape}")
        return shape
    if kind == "fullyconnected":
        return (layer["out_features"],)
    if len(shape) != 3:
        raise SpecError(f"{kind} layer {layer.name!r} after {prev!r} needs [C,H,W] input, got {shape}")
    c, h, w = shape
    if kind == "lrn":
        return shape
    if kind == "maxpool":
        win, s = layer["window"], layer["stride"]
        if win > h or win > w:
            raise SpecError(f"pool {layer.name!r}: window {win} exceeds output {h}x{w} of {prev!r}")
        return (c, (h - win) // s + 1, (w - win) // s + 1)
    g = layer["groups"]
    if c % g or layer["out_channels"] % g:
        raise SpecError(f"conv {layer.name!r}: groups={g} does not divide channels of {prev!r} ({c})"
                        f" or out_channels ({layer['out_channels']})")
    k, s, p = layer["kernel"], layer["stride"], layer["pad"]
    ho, wo = conv_output_size(h, k, s, p), conv_output_size(w, k, s, p)
    if ho < 1 or wo < 1:
        raise SpecError(f"conv {layer.name!r}: kernel {k} does not fit output {h}x{w} of {prev!r}")
    return (layer["out_channels"], ho, wo)


def parse_kv_line(line: str, lineno: int, source: str = "<text>") -> dict:
    record = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise SpecError(f"{source}:{lineno}: expected key=value, got {token!r}")
        record[key] = value
    return record


def parse_network(text: str, source: str = "<text>") -> NetworkSpec:
    input_shape = None
    layers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        record = parse_kv_line(line, lineno, source)
        kind = record.pop("kind", None)
        if kind is None:
            raise SpecError(f"{source}:{lineno}: missing 'kind'")
        try:
            if kind == "input":
                if input_shape is not None or layers:
                    raise SpecError("input must be declared once, before any layer")
                input_shape = tuple(int(d) for d in record.pop("shape").split(","))
                if record:
                    raise SpecError(f"unexpected keys {sorted(record)}")
                continue
            name = record.pop("name", None)
            if not name:
                raise SpecError("missing 'name'")
            layers.append(LayerSpec(name, kind, record))
        except (SpecError, KeyError, ValueError) as exc:
            raise SpecError(f"{source}:{lineno}: {exc}") from None
    if input_shape is None:
        raise SpecError(f"{source}: no input declaration")
    return NetworkSpec(layers, input_shape)


def load_network(path) -> NetworkSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read(), source=str(path))


def format_network(spec: NetworkSpec) -> str:
    lines = ["kind=input shape=" + ",".join(str(d) for d in spec.input_shape)]
    for layer in spec.layers:
        fields = [f"name={layer.name}", f"kind={layer.kind}"]
        fields += [f"{k}={v}" for k, v in layer.params.items()]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def canonical_network() -> NetworkSpec:
    """The eight-layer ImageNet topology shipped with the package."""
    text = resources.files("visent.net").joinpath("canonical.net").read_text(encoding="utf-8")
    return parse_network(text, source="canonical.net")
