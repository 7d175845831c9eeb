"""
Low-level descriptors
=====================

Colour histogram, GIST, uniform LBP and a bag of visual words over dense
patches, computed for one synthetic image.
"""

import numpy as np

from visent.features import (DescriptorConfig, bow_spatial_pyramid, dense_patch_descriptors, gist, lbp,
                             lowlevel_layout, rgb_histogram, train_codebook)
from visent.synthetic import WARM, colour_image

rng = np.random.default_rng(1)
image = colour_image(rng, WARM, size=96)
config = DescriptorConfig(codebook_size=64)

hist = rgb_histogram(image)
print("histogram", hist.shape, "per-channel sums", hist.reshape(3, -1).sum(axis=1))

g = gist(image, config)
print("gist", g.shape, "strongest filter/cell:", int(g.argmax()))

h = lbp(image, config)
print("lbp", h.shape, "mass in the shared non-uniform bin:", round(float(h[-1]), 3))

# dense 16x16 patches at stride 8 feed a small codebook
centers, desc = dense_patch_descriptors(image, config)
print("patches", desc.shape, "first centre", centers[0])
pool = np.concatenate([dense_patch_descriptors(colour_image(rng, WARM, 96), config)[1] for _ in range(8)])
codebook = train_codebook(pool, k=config.codebook_size, seed=0)
print(f"codebook: {codebook.iterations} Lloyd iterations, inertia {codebook.inertia_trace[-1]:.1f}")

bow = bow_spatial_pyramid(image, codebook, config)
print("bag of words", bow.shape, "words present in whole image:", int(bow[: config.codebook_size].sum()))

for name, cols in lowlevel_layout(config).items():
    print(f"{name:10s} columns {cols.start}..{cols.stop}")
