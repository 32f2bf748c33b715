"""Numba-jitted 3x3 convolution kernels.

Same contract and layouts as :mod:`clab.kernels.numpy_ops`. The matmuls still
go through BLAS (``@`` on contiguous arrays); what is jitted is the im2col
packing and the col2im scatter-add, which are the memory-bound parts that the
pure-numpy path pays for in strided copies. Pack loops parallelize over the
batch with disjoint output rows, so results are bitwise reproducible across
runs regardless of thread scheduling.
"""

import numpy as np
from numba import njit, prange

from .numpy_ops import out_size


@njit(parallel=True, fastmath=False, cache=True)
def _im2col(xp, stride, ho, wo):
    b = xp.shape[0]
    c = xp.shape[3]
    col = np.empty((b * ho * wo, 9 * c), xp.dtype)
    for bi in prange(b):
        for i in range(ho):
            for j in range(wo):
                row = (bi * ho + i) * wo + j
                for ki in range(3):
                    si = stride * i + ki
                    for kj in range(3):
                        sj = stride * j + kj
                        base = (ki * 3 + kj) * c
                        for ch in range(c):
                            col[row, base + ch] = xp[bi, si, sj, ch]
    return col


@njit(parallel=True, fastmath=False, cache=True)
def _col2im(dcol, b, h, w, c, stride, ho, wo):
    dxp = np.zeros((b, h + 2, w + 2, c), dcol.dtype)
    for bi in prange(b):
        for i in range(ho):
            for j in range(wo):
                row = (bi * ho + i) * wo + j
                for ki in range(3):
                    si = stride * i + ki
                    for kj in range(3):
                        sj = stride * j + kj
                        base = (ki * 3 + kj) * c
                        for ch in range(c):
                            dxp[bi, si, sj, ch] += dcol[row, base + ch]
    return dxp


def im2col(x, stride):
    b, h, w, c = x.shape
    xp = np.zeros((b, h + 2, w + 2, c), x.dtype)
    xp[:, 1:-1, 1:-1, :] = x
    return _im2col(xp, stride, out_size(h, stride), out_size(w, stride))


def col2im(dcol, x_shape, stride):
    b, h, w, c = x_shape
    ho, wo = out_size(h, stride), out_size(w, stride)
    dxp = _col2im(dcol, b, h, w, c, stride, ho, wo)
    return dxp[:, 1:-1, 1:-1, :]


def conv3x3_forward(x, w2, bias, stride):
    b, h, w, _ = x.shape
    ho, wo = out_size(h, stride), out_size(w, stride)
    col = im2col(x, stride)
    y = col @ w2
    y += bias
    return y.reshape(b, ho, wo, w2.shape[1]), col


def conv3x3_backward(dy, col, x_shape, w2, stride):
    o = w2.shape[1]
    dy2 = dy.reshape(-1, o)
    dbias = dy2.sum(axis=0)
    dw2 = col.T @ dy2
    dcol = dy2 @ w2.T
    dx = col2im(dcol, x_shape, stride)
    return dx, dw2, dbias
