"""Pure-numpy 3x3 convolution kernels (im2col + one BLAS matmul).

Layout conventions shared with the numba backend:

* activations are channels-last ``[B, H, W, C]``,
* a 3x3 kernel is stored as ``[9*C, O]`` (tap-position major, channel minor),
  which is exactly ``w.reshape(9 * C, O)`` for a ``[3, 3, C, O]`` weight array,
* padding is fixed at 1, strides 1 and 2 are supported.

The im2col matrix is returned from the forward pass so backward can reuse it
for the weight gradient instead of repacking.
"""

import numpy as np


def out_size(n, stride):
    return (n + 2 - 3) // stride + 1


def _pad(x):
    b, h, w, c = x.shape
    xp = np.zeros((b, h + 2, w + 2, c), x.dtype)
    xp[:, 1:-1, 1:-1, :] = x
    return xp


def im2col(x, stride):
    """Pack ``[B, H, W, C]`` into ``[B*Ho*Wo, 9*C]`` (pad 1)."""
    b, h, w, c = x.shape
    ho, wo = out_size(h, stride), out_size(w, stride)
    xp = _pad(x)
    m = b * ho * wo
    col = np.empty((m, 9 * c), x.dtype)
    k = 0
    for ki in range(3):
        for kj in range(3):
            view = xp[:, ki:ki + stride * (ho - 1) + 1:stride,
                      kj:kj + stride * (wo - 1) + 1:stride, :]
            col[:, k * c:(k + 1) * c] = view.reshape(m, c)
            k += 1
    return col


def col2im(dcol, x_shape, stride):
    """Scatter-add ``[B*Ho*Wo, 9*C]`` back to the ``[B, H, W, C]`` input grid."""
    b, h, w, c = x_shape
    ho, wo = out_size(h, stride), out_size(w, stride)
    dxp = np.zeros((b, h + 2, w + 2, c), dcol.dtype)
    k = 0
    for ki in range(3):
        for kj in range(3):
            view = dxp[:, ki:ki + stride * (ho - 1) + 1:stride,
                       kj:kj + stride * (wo - 1) + 1:stride, :]
            view += dcol[:, k * c:(k + 1) * c].reshape(b, ho, wo, c)
            k += 1
    return dxp[:, 1:-1, 1:-1, :]


def conv3x3_forward(x, w2, bias, stride):
    """3x3 conv, pad 1. Returns ``(y, col)`` with y ``[B, Ho, Wo, O]``."""
    b, h, w, c = x.shape
    ho, wo = out_size(h, stride), out_size(w, stride)
    col = im2col(x, stride)
    y = col @ w2
    y += bias
    return y.reshape(b, ho, wo, w2.shape[1]), col


def conv3x3_backward(dy, col, x_shape, w2, stride):
    """Gradients of conv3x3_forward: returns ``(dx, dw2, dbias)``."""
    o = w2.shape[1]
    dy2 = dy.reshape(-1, o)
    dbias = dy2.sum(axis=0)
    dw2 = col.T @ dy2
    dcol = dy2 @ w2.T
    dx = col2im(dcol, x_shape, stride)
    return dx, dw2, dbias
