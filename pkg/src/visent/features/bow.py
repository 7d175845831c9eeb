"""Bag of visual words: dense gradient patches, k-means codebook and
spatial-pyramid max pooling of hard assignments."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..container import pack_meta, read_blobs, unpack_meta, write_blobs
from ..tensor import as_image, to_gray
from .config import DescriptorConfig

log = logging.getLogger(__name__)

_CLAMP = 0.2


def dense_patch_descriptors(img, config: DescriptorConfig = DescriptorConfig()):
    """Gradient-orientation histograms on a dense grid of square patches.

    Returns ``(centers, descriptors)``: patch centres as ``[n, 2]`` (row, col)
    pixel coordinates and ``[n, cells*cells*bins]`` descriptors. Each patch is
    split into ``cells x cells`` cells holding a magnitude-weighted histogram of
    gradient direction (``bins`` sectors over the full circle, sector 0 starting
    at the +x direction). Descriptors are L2-normalised, clamped at 0.2 and
    renormalised; flat patches give the zero vector.
    """
    gray = to_gray(as_image(img)).astype(np.float64)
    h, w = gray.shape
    size, stride = config.patch_size, config.patch_stride
    nb, nc = config.patch_bins, config.patch_cells
    if h < size or w < size:
        return np.zeros((0, 2)), np.zeros((0, config.patch_dim), dtype=np.float32)

    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    angle = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    sector = np.minimum((angle / (2 * np.pi / nb)).astype(np.intp), nb - 1)
    weighted = np.zeros((h, w, nb))
    np.put_along_axis(weighted, sector[..., None], mag[..., None], axis=2)
    integral = np.zeros((h + 1, w + 1, nb))
    integral[1:, 1:] = weighted.cumsum(0).cumsum(1)

    ys = np.arange(0, h - size + 1, stride)
    xs = np.arange(0, w - size + 1, stride)
    cell = size // nc
    offs = np.arange(nc) * cell
    # corners of every cell of every patch: [ny, nc] rows and [nx, nc] cols
    r0 = ys[:, None] + offs[None, :]
    c0 = xs[:, None] + offs[None, :]
    r1, c1 = r0 + cell, c0 + cell
    a = integral[r1[:, None, :, None], c1[None, :, None, :]]
    b = integral[r0[:, None, :, None], c1[None, :, None, :]]
    c = integral[r1[:, None, :, None], c0[None, :, None, :]]
    d = integral[r0[:, None, :, None], c0[None, :, None, :]]
    hist = (a - b - c + d).reshape(len(ys) * len(xs), nc * nc * nb)

    norms = np.linalg.norm(hist, axis=1, keepdims=True)
    flat = norms[:, 0] < 1e-12
    desc = hist / np.where(flat[:, None], 1.0, norms)
    desc = np.minimum(desc, _CLAMP)
    norms = np.linalg.norm(desc, axis=1, keepdims=True)
    desc = desc / np.where(flat[:, None], 1.0, norms)
    desc[flat] = 0.0

    cy, cx = np.meshgrid(ys + (size - 1) / 2, xs + (size - 1) / 2, indexing="ij")
    centers = np.stack([cy.ravel(), cx.ravel()], axis=1)
    return centers, desc.astype(np.float32)


@dataclass
class Codebook:
    centroids: np.ndarray
    seed: int = 0
    iterations: int = 0
    inertia_trace: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def nearest_centroid(x: np.ndarray, centroids: np.ndarray, chunk: int = 4096):
    """Index of and squared distance to the nearest centroid for each row.

    Ties go to the lowest index.
    """
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(centroids, dtype=np.float64)
    c_sq = np.einsum("ij,ij->i", c, c)
    labels = np.empty(x.shape[0], dtype=np.intp)
    dist = np.empty(x.shape[0])
    for start in range(0, x.shape[0], chunk):
        xb = x[start:start + chunk]
        d2 = np.einsum("ij,ij->i", xb, xb)[:, None] - 2.0 * xb @ c.T + c_sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        idx = d2.argmin(axis=1)
        labels[start:start + chunk] = idx
        dist[start:start + chunk] = d2[np.arange(len(idx)), idx]
    return labels, dist


def _kmeans_pp(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        cum = np.cumsum(d2)
        pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        pick = min(pick, n - 1)
        centers[j] = x[pick]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def train_codebook(descriptors, k: int = 1000, seed: int = 0, max_iter: int = 100,
                   tol: float = 1e-4) -> Codebook:
    """k-means with k-means++ seeding; deterministic for a fixed seed and row order.

    Lloyd iterations stop once no centroid moves by ``tol`` or more, or after
    ``max_iter`` rounds. A cluster left empty is re-seeded with the point that
    lies farthest from its own centroid.
    """
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2 or k < 1:
        raise ValueError("descriptors must be a 2-D array and k >= 1")
    distinct = np.unique(x, axis=0).shape[0] if x.shape[0] else 0
    if distinct < k:
        raise ValueError(f"need at least {k} distinct descriptors, got {distinct}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        labels, d2 = nearest_centroid(x, centers)
        trace.append(float(d2.sum()))
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        new = centers.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            log.debug("re-seeding %d empty clusters at iteration %d", empty.size, it)
            far = np.argsort(-d2, kind="stable")
            for j, p in zip(empty, far):
                new[j] = x[p]
        shift = np.sqrt(np.max(np.sum((new - centers) ** 2, axis=1)))
        centers = new
        if shift < tol:
            break
    return Codebook(centers.astype(np.float32), seed=seed, iterations=it, inertia_trace=trace)


def save_codebook(path, codebook: Codebook) -> None:
    meta = {"seed": int(codebook.seed), "iterations": int(codebook.iterations)}
    write_blobs(path, {"codebook": codebook.centroids, "meta": pack_meta(meta)})


def load_codebook(path) -> Codebook:
    blobs = read_blobs(path)
    meta = unpack_meta(blobs["meta"]) if "meta" in blobs else {}
    return Codebook(blobs["codebook"], seed=meta.get("seed", 0), iterations=meta.get("iterations", 0))


def bow_spatial_pyramid(img, codebook: Codebook, config: DescriptorConfig = DescriptorConfig()):
    """Max-pooled one-hot word assignments over each pyramid region.

    Blocks are ordered by level, then region row-major; a patch belongs to the
    region containing its centre (boundary centres go to the lower index).
    """
    img = as_image(img)
    if codebook.dim != config.patch_dim:
        raise ValueError(f"codebook dimension {codebook.dim} != descriptor dimension {config.patch_dim}")
    k = codebook.k
    out = np.zeros(k * config.pyramid_regions, dtype=np.float32)
    centers, desc = dense_patch_descriptors(img, config)
    if desc.shape[0] == 0:
        return out
    words, _ = nearest_centroid(desc, codebook.centroids)
    h, w = img.shape[:2]
    offset = 0
    for level in config.pyramid_levels:
        row = np.minimum((centers[:, 0] * level / h).astype(np.intp), level - 1)
        col = np.minimum((centers[:, 1] * level / w).astype(np.intp), level - 1)
        region = row * level + col
        out[offset + region * k + words] = 1.0
        offset += level * level * k
    return out
