"""Synthetic fixtures: colour-coded image classes and curation manifests
with prescribed label counts."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .data import PostRecord, write_posts
from .tensor import write_pnm

WARM = (200.0, 120.0, 70.0)
COOL = (70.0, 110.0, 190.0)

CURATION_COUNTS = {-2: 165, -1: 190, 0: 90, 1: 465, 2: 200}

_STRONG_WORDS = {-2: "miserable", -1: "sad", 0: "happy", 1: "happy", 2: "joyful"}

LEXICON_TEXT = """\
type=strongsubj len=1 word1=happy pos1=adj stemmed1=n priorpolarity=positive
type=strongsubj len=1 word1=joyful pos1=adj stemmed1=n priorpolarity=positive
type=strongsubj len=1 word1=sad pos1=adj stemmed1=n priorpolarity=negative
type=strongsubj len=1 word1=miserable pos1=adj stemmed1=n priorpolarity=negative
type=strongsubj len=1 word1=mar pos1=verb stemmed1=y priorpolarity=negative
type=weaksubj len=1 word1=nice pos1=adj stemmed1=n priorpolarity=positive
"""


def colour_image(rng, base, size=64, spread=35.0):
    """Textured image: a jittered base colour, smooth shading, blobs and pixel noise."""
    base = np.asarray(base, dtype=np.float64) + rng.normal(0, 15, 3)
    yy, xx = np.mgrid[0:size, 0:size] / size
    shade = 25 * np.sin(2 * np.pi * (rng.uniform(0.5, 2) * xx + rng.uniform(0.5, 2) * yy + rng.uniform()))
    img = base[None, None, :] + shade[..., None]
    for _ in range(rng.integers(2, 6)):
        cy, cx, r = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.05, 0.2)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        img[mask] += rng.normal(0, 40, 3)
    img += rng.normal(0, spread, img.shape)
    return np.clip(img, 0, 255).round()


def write_colour_dataset(root, n=400, seed=0, size=64, labels=(2, -2)):
    """Write ``n`` PPM images in two colour classes plus an annotated manifest.

    Returns ``(manifest_path, lexicon_path)``. Classes alternate; every post
    gets a lexicon-matching tag and a unanimous-or-majority annotation.
    """
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    posts = []
    for i in range(n):
        label = labels[i % 2]
        base = WARM if label == labels[0] else COOL
        name = f"images/{i:04d}.ppm"
        write_pnm(root / name, colour_image(rng, base, size))
        tag = "happy" if label > 0 else "sad"
        other = label - 1 if label > 0 else label + 1
        notes = (label, label, label) if i % 3 else (label, other, label)
        posts.append(PostRecord(f"img{i:04d}", name, (tag, "photo"), notes))
    manifest = root / "posts.tsv"
    write_posts(manifest, posts)
    lexicon = root / "lexicon.tff"
    lexicon.write_text(LEXICON_TEXT, encoding="utf-8")
    return manifest, lexicon


def curation_posts(counts=None, unresolved=69, seed=0):
    """Annotated posts whose majority votes reproduce ``counts`` exactly,
    followed by ``unresolved`` posts with three distinct scores."""
    counts = CURATION_COUNTS if counts is None else counts
    rng = np.random.default_rng(seed)
    posts = []
    i = 0
    for label, n in counts.items():
        for j in range(n):
            others = [s for s in range(-2, 3) if s != label]
            if j % 2:
                scores = [label, label, int(rng.choice(others))]
            else:
                scores = [label] * 3
            rng.shuffle(scores)
            posts.append(PostRecord(f"t{i:05d}", f"images/{i:05d}.ppm", (_STRONG_WORDS[label], "photo"),
                                    tuple(int(s) for s in scores)))
            i += 1
    for _ in range(unresolved):
        scores = [int(s) for s in rng.choice(np.arange(-2, 3), 3, replace=False)]
        posts.append(PostRecord(f"t{i:05d}", f"images/{i:05d}.ppm", ("happy",), tuple(scores)))
        i += 1
    return posts


def write_curation_fixture(root, unresolved=69, seed=0):
    root = Path(root)
    os.makedirs(root, exist_ok=True)
    manifest = root / "posts.tsv"
    write_posts(manifest, curation_posts(unresolved=unresolved, seed=seed))
    lexicon = root / "lexicon.tff"
    lexicon.write_text(LEXICON_TEXT, encoding="utf-8")
    return manifest, lexicon
