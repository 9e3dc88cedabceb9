"""Numerical kernels on numpy arrays.

Tensors are plain ``numpy.ndarray`` objects in row-major order. Every kernel
here is a pure function of its arguments. Convolutions are valid (no padding),
stride 1, and computed as cross-correlation (kernels are not flipped). Pooling
is 2x2 with stride 2.

Kernels that operate on images accept either a single sample ``(C, H, W)`` or a
batch ``(N, C, H, W)``.
"""
from __future__ import annotations

import math
import os
import sys

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError, SizeError

_INDEX_MAX = sys.maxsize


def tensor_new(shape, fill=0.0, dtype=np.float64) -> np.ndarray:
    """Return a tensor of ``shape`` with every element equal to ``fill``."""
    dims = tuple(int(d) for d in shape)
    if not dims:
        raise SizeError("shape must have at least one dimension")
    if any(d < 1 for d in dims):
        raise SizeError(f"every extent must be >= 1, got {dims}")
    count = 1
    for d in dims:
        count *= d
        if count > _INDEX_MAX:
            raise SizeError(f"element count of {dims} overflows the index type")
    return np.full(dims, fill, dtype=dtype)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def _as_batch(x: np.ndarray, what: str) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f"{what} must be (C, H, W) or (N, C, H, W), got {x.shape}")


def _check_conv(x: np.ndarray, kernels: np.ndarray) -> None:
    if kernels.ndim != 4:
        raise ShapeError(f"kernels must be (C_out, C_in, kH, kW), got {kernels.shape}")
    _, c_in, h, w = x.shape
    _, kc, kh, kw = kernels.shape
    if kc != c_in:
        raise ShapeError(f"input has {c_in} channels but kernels expect {kc}")
    if kh > h or kw > w:
        raise ShapeError(f"kernel {kh}x{kw} larger than input {h}x{w}")


def _im2col(xb: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Patch matrix of shape (N*Ho*Wo, C*kH*kW), rows in (n, i, j) order."""
    n, c, h, w = xb.shape
    ho, wo = h - kh + 1, w - kw + 1
    windows = sliding_window_view(xb, (kh, kw), axis=(2, 3))  # N,C,Ho,Wo,kh,kw
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)


def conv2d_valid(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid cross-correlation of ``x`` with ``kernels`` plus per-channel bias.

    Computed as one matrix product between the input patch matrix and the
    flattened kernels.
    """
    xb, single = _as_batch(x, "input")
    _check_conv(xb, kernels)
    n, _, h, w = xb.shape
    c_out, _, kh, kw = kernels.shape
    if bias.shape != (c_out,):
        raise ShapeError(f"bias must have shape ({c_out},), got {bias.shape}")
    ho, wo = h - kh + 1, w - kw + 1
    out = _im2col(xb, kh, kw) @ kernels.reshape(c_out, -1).T + bias
    out = np.ascontiguousarray(out.reshape(n, ho, wo, c_out).transpose(0, 3, 1, 2))
    return out[0] if single else out


def conv2d_valid_backward(x: np.ndarray, kernels: np.ndarray, grad_output: np.ndarray):
    """Gradients of :func:`conv2d_valid` w.r.t. input, kernels and bias."""
    xb, single = _as_batch(x, "input")
    gb, _ = _as_batch(grad_output, "grad_output")
    _check_conv(xb, kernels)
    n, c_in, h, w = xb.shape
    c_out, _, kh, kw = kernels.shape
    ho, wo = h - kh + 1, w - kw + 1
    if gb.shape != (n, c_out, ho, wo):
        raise ShapeError(
            f"grad_output shape {gb.shape} does not match forward output {(n, c_out, ho, wo)}"
        )
    g2 = gb.transpose(0, 2, 3, 1).reshape(n * ho * wo, c_out)
    grad_kernels = (g2.T @ _im2col(xb, kh, kw)).reshape(kernels.shape)
    grad_bias = g2.sum(axis=0)

    # col2im: scatter-add each kernel offset's contribution back onto the input
    dcols = (g2 @ kernels.reshape(c_out, -1)).reshape(n, ho, wo, c_in, kh, kw)
    dcols = dcols.transpose(0, 3, 4, 5, 1, 2)  # N,C,kh,kw,Ho,Wo
    grad_input = np.zeros_like(xb, dtype=np.result_type(xb, gb))
    for p in range(kh):
        for q in range(kw):
            grad_input[:, :, p : p + ho, q : q + wo] += dcols[:, :, p, q]
    return (grad_input[0] if single else grad_input), grad_kernels, grad_bias


def maxpool2x2(x: np.ndarray):
    """2x2 max pooling, stride 2, over the last two axes.

    Returns ``(output, argmax)`` where ``argmax`` holds the winning position
    0..3 of each window in row-major order. Ties go to the first maximum.
    """
    if x.ndim < 2:
        raise ShapeError(f"maxpool needs at least 2 dimensions, got {x.shape}")
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even H and W, got {h}x{w}")
    lead = x.shape[:-2]
    win = x.reshape(*lead, h // 2, 2, w // 2, 2)
    win = np.moveaxis(win, -3, -2).reshape(*lead, h // 2, w // 2, 4)
    argmax = win.argmax(axis=-1)
    out = np.take_along_axis(win, argmax[..., None], axis=-1)[..., 0]
    return out, argmax


def maxpool2x2_backward(argmax: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
    if argmax.shape != grad_output.shape:
        raise ShapeError(
            f"argmax map {argmax.shape} does not match grad_output {grad_output.shape}"
        )
    lead = argmax.shape[:-2]
    ho, wo = argmax.shape[-2:]
    win = np.zeros((*lead, ho, wo, 4), dtype=grad_output.dtype)
    np.put_along_axis(win, argmax[..., None], grad_output[..., None], axis=-1)
    win = win.reshape(*lead, ho, wo, 2, 2)
    return np.moveaxis(win, -2, -3).reshape(*lead, 2 * ho, 2 * wo)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
    # gradient at exactly 0 is 0
    return grad_output * (x > 0)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    if logits.ndim != 2:
        raise ShapeError(f"softmax_rows needs a (batch, classes) tensor, got {logits.shape}")
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def configure_threads(threads: int | None = None):
    """Cap BLAS/OpenMP threads; ``TGOCR_THREADS`` is used when ``threads`` is None.

    Returns the threadpoolctl limiter (or None when nothing was capped).
    """
    if threads is None:
        env = os.environ.get("TGOCR_THREADS")
        if not env:
            return None
        threads = int(env)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def prod(dims) -> int:
    return math.prod(int(d) for d in dims)
