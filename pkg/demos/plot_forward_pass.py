"""
Running the canonical network
=============================

Build the bundled eight-layer topology, fill it with seeded random weights
and read activations from the two fully connected taps.
"""

import time

import numpy as np

from visent.net import DEFAULT_MEANS, canonical_network, forward, random_weights
from visent.tensor import preprocess

spec = canonical_network()
for layer, shape in zip(spec.layers, spec.output_shapes()):
    print(f"{layer.name:8s} {layer.kind:15s} {shape}")

# He-initialised weights; the same seed always gives the same store
weights = random_weights(spec, seed=0)

# a random 300x400 image goes through resize-shorter-side, centre crop and mean subtraction
rng = np.random.default_rng(0)
image = rng.uniform(0, 255, (300, 400, 3)).astype(np.float32)
x = preprocess(image, DEFAULT_MEANS)
print("input tensor", x.shape)

start = time.perf_counter()
out = forward(spec, weights, x, ["fc7", "fc8"])
print(f"forward pass took {1000 * (time.perf_counter() - start):.0f} ms")
print("fc7", out["fc7"].shape, "non-zero:", np.count_nonzero(out["fc7"]))
print("fc8", out["fc8"].shape, "sum:", float(out["fc8"].sum()))
