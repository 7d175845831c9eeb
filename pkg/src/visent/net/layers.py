"""Forward kernels for the CNN layer types.

All kernels take and return float32 arrays; spatial inputs are ``[C, H, W]``.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..tensor import DTYPE, ShapeError, gemm


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Unfold ``[C, H, W]`` into ``[C*kh*kw, Ho*Wo]`` patch columns.

    Row order is channel-major then kernel row then kernel column, matching
    a ``[C_out, C, kh, kw]`` weight tensor flattened to ``[C_out, C*kh*kw]``.
    """
    c = x.shape[0]
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = win.shape[1], win.shape[2]
    return np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(c * kh * kw, ho * wo)


def conv_forward(x, weights, bias, stride: int = 1, pad: int = 0, groups: int = 1) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    weights = np.asarray(weights, dtype=DTYPE)
    bias = np.asarray(bias, dtype=DTYPE).reshape(-1)
    if x.ndim != 3 or weights.ndim != 4:
        raise ShapeError(f"conv expects [C,H,W] input and 4-D weights, got {x.shape}, {weights.shape}")
    if stride < 1 or pad < 0 or groups < 1:
        raise ValueError(f"invalid stride/pad/groups: {stride}/{pad}/{groups}")
    c_in, h, w = x.shape
    c_out, c_per_group, kh, kw = weights.shape
    if c_in % groups or c_out % groups:
        raise ValueError(f"groups={groups} does not divide channels {c_in} -> {c_out}")
    if c_per_group != c_in // groups:
        raise ShapeError(f"weights expect {c_per_group} channels per group, input gives {c_in // groups}")
    if bias.shape[0] != c_out:
        raise ShapeError(f"bias length {bias.shape[0]} != {c_out} output channels")
    ho = conv_output_size(h, kh, stride, pad)
    wo = conv_output_size(w, kw, stride, pad)
    if ho < 1 or wo < 1:
        raise ShapeError(f"kernel {kh}x{kw} with pad {pad} does not fit {h}x{w}")

    out = np.empty((c_out, ho * wo), dtype=DTYPE)
    cg_out = c_out // groups
    for g in range(groups):
        xs = x[g * c_per_group:(g + 1) * c_per_group]
        cols = im2col(xs, kh, kw, stride, pad)
        wmat = weights[g * cg_out:(g + 1) * cg_out].reshape(cg_out, -1)
        out[g * cg_out:(g + 1) * cg_out] = gemm(wmat, cols)
    out += bias[:, None]
    return out.reshape(c_out, ho, wo)


def relu(x) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    return np.maximum(x, DTYPE(0))


def lrn(x, n: int = 5, k: float = 2.0, alpha: float = 1e-4, beta: float = 0.75) -> np.ndarray:
    """Cross-channel local response normalisation.

    ``b_c = a_c / (k + alpha * sum_{j in window(c)} a_j**2) ** beta`` where the
    window spans ``n`` channels centred on ``c``, clipped at the edges.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError(f"lrn window must be a positive odd number, got {n}")
    x = np.asarray(x, dtype=DTYPE)
    c = x.shape[0]
    half = n // 2
    sq = np.square(x, dtype=np.float64)
    csum = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(sq, axis=0)])
    lo = np.clip(np.arange(c) - half, 0, c)
    hi = np.clip(np.arange(c) + half + 1, 0, c)
    window = csum[hi] - csum[lo]
    return (x / np.power(k + alpha * window, beta)).astype(DTYPE)


def max_pool(x, window: int, stride: int) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim != 3:
        raise ShapeError(f"max_pool expects [C,H,W], got {x.shape}")
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    _, h, w = x.shape
    if window > h or window > w:
        raise ShapeError(f"pool window {window} exceeds input {h}x{w}")
    win = sliding_window_view(x, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    return np.ascontiguousarray(win.max(axis=(3, 4)))


def fc_forward(x, weights, bias) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE).reshape(-1)
    weights = np.asarray(weights, dtype=DTYPE)
    bias = np.asarray(bias, dtype=DTYPE).reshape(-1)
    if weights.ndim != 2 or weights.shape[1] != x.shape[0]:
        raise ShapeError(f"fc weights {weights.shape} do not accept input of length {x.shape[0]}")
    if bias.shape[0] != weights.shape[0]:
        raise ShapeError(f"bias length {bias.shape[0]} != {weights.shape[0]} outputs")
    return gemm(weights, x[:, None])[:, 0] + bias


def softmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("softmax input contains non-finite values")
    e = np.exp(x - x.max())
    return (e / e.sum()).astype(DTYPE)
