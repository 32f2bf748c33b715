"""Differentiable building blocks on top of the conv kernels.

All forward functions return ``(output, cache)`` and each backward consumes
the upstream gradient plus that cache. Activations flowing through these
helpers are channels-last; the public model functions convert from the
channels-first arrays used at module boundaries.
"""

import numpy as np

from . import kernels


def init_conv(rng, in_ch, out_ch, dtype=np.float32):
    """Fan-in-scaled uniform weights ``[3, 3, in, out]``, zero bias."""
    bound = 1.0 / np.sqrt(9.0 * in_ch)
    w = rng.uniform(-bound, bound, size=(3, 3, in_ch, out_ch))
    return w.astype(dtype), np.zeros(out_ch, dtype)


def init_linear(rng, in_dim, out_dim, dtype=np.float32):
    bound = 1.0 / np.sqrt(in_dim)
    w = rng.uniform(-bound, bound, size=(in_dim, out_dim))
    return w.astype(dtype), np.zeros(out_dim, dtype)


def conv3x3(x, w, b, stride=1):
    """x ``[B, H, W, C]``, w ``[3, 3, C, O]`` -> y ``[B, Ho, Wo, O]``."""
    c, o = w.shape[2], w.shape[3]
    w2 = w.reshape(9 * c, o)
    y, col = kernels.conv3x3_forward(x, w2, b, stride)
    return y, (col, x.shape, w2, w.shape, stride)


def conv3x3_grad(dy, cache):
    col, x_shape, w2, w_shape, stride = cache
    dx, dw2, db = kernels.conv3x3_backward(dy, col, x_shape, w2, stride)
    return dx, dw2.reshape(w_shape), db


def relu(x):
    y = np.maximum(x, 0)
    return y, y


def relu_grad(dy, cache):
    return np.where(cache > 0, dy, 0)


def linear(x, w, b):
    """x ``[B, in]``, w ``[in, out]`` -> ``[B, out]``."""
    return x @ w + b, x


def linear_grad(dy, cache, w):
    x = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def global_mean_pool(x):
    """Adaptive average pool to 1x1: mean over spatial dims of ``[B,H,W,C]``."""
    return x.mean(axis=(1, 2)), x.shape


def global_mean_pool_grad(dy, x_shape):
    b, h, w, c = x_shape
    scale = np.asarray(1.0 / (h * w), dtype=dy.dtype)
    out = np.empty(x_shape, dy.dtype)
    out[:] = (dy * scale)[:, None, None, :]
    return out
