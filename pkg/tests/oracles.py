"""Slow, obviously-correct reference implementations used only by the tests."""
import numpy as np


def naive_conv2d(x, kernels, bias):
    """Quadruple-loop valid cross-correlation of one (C, H, W) sample."""
    c_in, h, w = x.shape
    c_out, _, kh, kw = kernels.shape
    out = np.zeros((c_out, h - kh + 1, w - kw + 1))
    for o in range(c_out):
        for i in range(h - kh + 1):
            for j in range(w - kw + 1):
                total = bias[o]
                for c in range(c_in):
                    for p in range(kh):
                        for q in range(kw):
                            total += x[c, i + p, j + q] * kernels[o, c, p, q]
                out[o, i, j] = total
    return out


def central_diff(f, x, step=1e-3):
    """Central finite differences of scalar ``f(x)``; ``x`` is copied, not mutated."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up = x.copy()
        up[idx] += step
        down = x.copy()
        down[idx] -= step
        grad[idx] = (f(up) - f(down)) / (2 * step)
    return grad


def max_rel_err(a, b, floor=1e-6):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def away_from_zero(x, margin=0.05):
    return np.where(x >= 0, x + margin, x - margin)


def distinct_values(rng, shape, gap=0.01):
    """Random tensor whose entries are pairwise at least ``gap`` apart."""
    n = int(np.prod(shape))
    return (rng.permutation(n).astype(np.float64) * gap - n * gap / 2).reshape(shape)
