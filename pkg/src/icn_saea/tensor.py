"""Dense grids and the convolution, product and 1x1 reduction operations of ICN.

Layout is fixed as (channel, row, col), row-major, float64.  Kernels are
(depth, kh, kw).  Batched helpers use (batch, channel, row, col) for images
and (n_kernels, depth, kh, kw) for kernel stacks.

The single-grid operations (:func:`conv2d_same`, :func:`hadamard`,
:func:`weighted_channel_sum`) are the reference definitions.  The batched
:func:`conv_same_batch` and :func:`conv_weight_grad` are what the model uses;
they lower the convolution to one matrix product per call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError

__all__ = [
    "Grid3",
    "Kernel3",
    "conv2d_same",
    "hadamard",
    "weighted_channel_sum",
    "conv_same_batch",
    "conv_weight_grad",
]


@dataclass(frozen=True)
class Grid3:
    """A (channels, height, width) block of float64 values."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ContractError(f"Grid3 needs a non-empty 3-d array, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class Kernel3:
    """A (depth, kh, kw) convolution filter with odd spatial sides."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ContractError(f"Kernel3 needs a non-empty 3-d array, got shape {arr.shape}")
        if arr.shape[1] % 2 == 0 or arr.shape[2] % 2 == 0:
            raise ContractError(f"kernel sides must be odd, got {arr.shape[1]}x{arr.shape[2]}")
        object.__setattr__(self, "weights", arr)

    @property
    def depth(self) -> int:
        return self.weights.shape[0]

    @property
    def kh(self) -> int:
        return self.weights.shape[1]

    @property
    def kw(self) -> int:
        return self.weights.shape[2]


def conv2d_same(inp: Grid3, kernel: Kernel3) -> Grid3:
    """Zero-padded, stride-1 cross-correlation summed over input channels.

    ``out[r, c] = sum_{ch, i, j} k[ch, i, j] * x[ch, r + i - kh//2, c + j - kw//2]``
    with out-of-range taps reading zero.  Output is single-channel with the
    input's spatial size.
    """
    if kernel.depth != inp.channels:
        raise ContractError(
            f"kernel depth {kernel.depth} does not match input channels {inp.channels}"
        )
    x = inp.data
    _, h, w = x.shape
    ph, pw = kernel.kh // 2, kernel.kw // 2
    padded = np.zeros((x.shape[0], h + 2 * ph, w + 2 * pw))
    padded[:, ph : ph + h, pw : pw + w] = x
    out = np.zeros((h, w))
    for i in range(kernel.kh):
        for j in range(kernel.kw):
            tap = kernel.weights[:, i, j]
            out += np.tensordot(tap, padded[:, i : i + h, j : j + w], axes=1)
    return Grid3(out[None])


def hadamard(a: Grid3, b: Grid3) -> Grid3:
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch {a.shape} vs {b.shape}")
    return Grid3(a.data * b.data)


def weighted_channel_sum(maps: Sequence[Grid3], coeffs) -> Grid3:
    """The 1x1 reduction: ``sum_c coeffs[c] * maps[c]``."""
    coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
    if len(maps) == 0 or len(maps) != coeffs.size:
        raise ContractError(f"{len(maps)} maps but {coeffs.size} coefficients")
    shape = maps[0].shape
    if shape[0] != 1 or any(m.shape != shape for m in maps):
        raise ContractError("maps must be single-channel and share one shape")
    out = np.zeros(shape)
    for coef, m in zip(coeffs, maps):
        out += coef * m.data
    return Grid3(out)


def _patches(x: np.ndarray, side: int) -> np.ndarray:
    """im2col: (B, D, S, T) -> (B*S*T, D*side*side), zero padded."""
    b, d, s, t = x.shape
    h = side // 2
    padded = np.pad(x, ((0, 0), (0, 0), (h, h), (h, h)))
    win = np.lib.stride_tricks.sliding_window_view(padded, (side, side), axis=(2, 3))
    # win: (B, D, S, T, side, side)
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b * s * t, d * side * side)


def conv_same_batch(x: np.ndarray, kernels: np.ndarray, patches: np.ndarray | None = None) -> np.ndarray:
    """Apply every kernel in a stack to every image in a batch.

    x: (B, D, S, T); kernels: (K, D, L, L), L odd.  Returns (B, K, S, T).
    ``patches`` may carry a precomputed im2col matrix of ``x``.
    """
    b, d, s, t = x.shape
    k, depth, kh, kw = kernels.shape
    if depth != d:
        raise ContractError(f"kernel depth {depth} does not match input channels {d}")
    if kh != kw or kh % 2 == 0:
        raise ContractError(f"kernels must be square with odd side, got {kh}x{kw}")
    cols = _patches(x, kh) if patches is None else patches
    out = cols @ kernels.reshape(k, -1).T
    return out.reshape(b, s, t, k).transpose(0, 3, 1, 2)


def conv_weight_grad(x: np.ndarray, upstream: np.ndarray, side: int,
                     patches: np.ndarray | None = None) -> np.ndarray:
    """Gradient of ``sum(upstream * conv_same_batch(x, W))`` with respect to W.

    x: (B, D, S, T); upstream: (B, K, S, T).  Returns (K, D, side, side).
    """
    b, d, s, t = x.shape
    k = upstream.shape[1]
    cols = _patches(x, side) if patches is None else patches
    g = upstream.transpose(0, 2, 3, 1).reshape(b * s * t, k)
    return (g.T @ cols).reshape(k, d, side, side)
