"""Dense float32 arrays, RGB/grayscale images and the preprocessing that
turns an image into a network input.

Tensors are plain ``numpy.ndarray`` objects of dtype float32 in row-major
(C-contiguous) layout; images are float32 arrays of shape ``(H, W, C)`` with
``C`` in {1, 3} and values in [0, 255].
"""
from __future__ import annotations

import os

import numpy as np

DTYPE = np.float32


class ShapeError(ValueError):
    """Raised when array dimensions do not line up."""


def as_tensor(data, shape=None) -> np.ndarray:
    """Return ``data`` as a contiguous float32 array of rank 1 to 4."""
    arr = np.ascontiguousarray(data, dtype=DTYPE)
    if shape is not None:
        arr = arr.reshape(shape)
    if not 1 <= arr.ndim <= 4:
        raise ShapeError(f"tensor rank must be 1..4, got shape {arr.shape}")
    return arr


def as_image(pixels) -> np.ndarray:
    """Validate and normalise an image to float32 ``(H, W, C)``."""
    img = np.asarray(pixels, dtype=DTYPE)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"image must be (H, W) or (H, W, 1|3), got {img.shape}")
    if img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError("image is empty")
    return np.ascontiguousarray(img)


def to_gray(img) -> np.ndarray:
    """Luminance ``0.299 R + 0.587 G + 0.114 B`` as a 2-D float32 array."""
    img = as_image(img)
    if img.shape[2] == 1:
        return img[:, :, 0].copy()
    r, g, b = (img[:, :, c].astype(np.float64) for c in range(3))
    return (0.299 * r + 0.587 * g + 0.114 * b).astype(DTYPE)


def _bilinear_axis(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(img, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centres.

    The source coordinate of output pixel ``i`` is ``(i + 0.5) * scale - 0.5``
    clamped to ``[0, n - 1]``; same-size resizes return the input unchanged.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be positive, got {out_h}x{out_w}")
    img = as_image(img)
    h, w, _ = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    r0, r1, fr = _bilinear_axis(h, out_h)
    c0, c1, fc = _bilinear_axis(w, out_w)
    src = img.astype(np.float64)
    fr = fr[:, None, None]
    fc = fc[None, :, None]
    top = src[r0][:, c0] * (1 - fc) + src[r0][:, c1] * fc
    bottom = src[r1][:, c0] * (1 - fc) + src[r1][:, c1] * fc
    return (top * (1 - fr) + bottom * fr).astype(DTYPE)


def resize_shorter_side(img, size: int) -> np.ndarray:
    img = as_image(img)
    h, w, _ = img.shape
    if h <= w:
        new_h, new_w = size, max(1, int(round(w * size / h)))
    else:
        new_h, new_w = max(1, int(round(h * size / w))), size
    return resize_bilinear(img, new_h, new_w)


def center_crop(img, size: int) -> np.ndarray:
    img = as_image(img)
    h, w, _ = img.shape
    if size < 1 or size > h or size > w:
        raise ValueError(f"crop size {size} does not fit a {h}x{w} image")
    top = (h - size) // 2
    left = (w - size) // 2
    return img[top:top + size, left:left + size].copy()


def to_input_tensor(img, channel_means) -> np.ndarray:
    """Channel-major ``[3, H, W]`` tensor with per-channel means removed."""
    img = as_image(img)
    if img.shape[2] != 3:
        raise ValueError("network input requires a 3-channel RGB image")
    means = np.asarray(channel_means, dtype=DTYPE).reshape(3, 1, 1)
    return np.ascontiguousarray(img.transpose(2, 0, 1) - means)


def preprocess(img, channel_means, resize_to: int = 256, crop: int = 224) -> np.ndarray:
    """Resize the shorter side, centre-crop and subtract channel means."""
    img = as_image(img)
    if img.shape[2] == 1:
        img = np.repeat(img, 3, axis=2)
    img = resize_shorter_side(img, resize_to)
    return to_input_tensor(center_crop(img, crop), channel_means)


def gemm(a, b) -> np.ndarray:
    """2-D float32 matrix product ``a @ b``."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"gemm needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return np.matmul(a, b)


# --- PNM codecs -------------------------------------------------------------

def _read_token(buf: bytes, pos: int):
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ValueError("unexpected end of PNM header")
    return buf[start:pos], pos


def read_pnm(path) -> np.ndarray:
    """Read a binary 8-bit PPM (P6) or PGM (P5) file as an image."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, pos = _read_token(buf, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{path}: unsupported PNM magic {magic!r}")
    width, pos = _read_token(buf, pos)
    height, pos = _read_token(buf, pos)
    maxval, pos = _read_token(buf, pos)
    w, h, maxv = int(width), int(height), int(maxval)
    if maxv != 255:
        raise ValueError(f"{path}: only 8-bit PNM supported (maxval {maxv})")
    pos += 1  # single whitespace byte after maxval
    channels = 3 if magic == b"P6" else 1
    need = w * h * channels
    raw = buf[pos:pos + need]
    if len(raw) != need:
        raise ValueError(f"{path}: truncated pixel data ({len(raw)} of {need} bytes)")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, channels)
    return as_image(pixels)


def write_pnm(path, img) -> None:
    img = as_image(img)
    h, w, c = img.shape
    magic = b"P6" if c == 3 else b"P5"
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(data.tobytes())
    os.replace(tmp, path)
