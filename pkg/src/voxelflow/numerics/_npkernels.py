"""Pure-numpy kernel implementations.

Fallback used when the compiled extension is unavailable. Convolutions are
evaluated as a loop over kernel offsets with vectorized accumulation, which
keeps summation order deterministic.
"""

import numpy as np


def conv2d_forward(x, w, stride, pad):
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    y = np.zeros((n, cout, ho, wo), dtype=np.float32)
    for ki in range(kh):
        for kj in range(kw):
            xs = xp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride]
            y += np.einsum("nchw,oc->nohw", xs, w[:, :, ki, kj])
    return y


def conv2d_backward(dy, x, w, stride, pad):
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    _, _, ho, wo = dy.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for ki in range(kh):
        for kj in range(kw):
            xs = xp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride]
            dw[:, :, ki, kj] = np.einsum("nohw,nchw->oc", dy, xs)
            dxp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += np.einsum(
                "nohw,oc->nchw", dy, w[:, :, ki, kj]
            )
    dx = dxp[:, :, pad : pad + h, pad : pad + wd] if pad else dxp
    return np.ascontiguousarray(dx), dw


def maxpool2_forward(x):
    n, c, h, w = x.shape
    windows = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = windows.reshape(n, c, h // 2, w // 2, 4)
    # argmax takes the first occurrence, which pins tie-breaking to
    # row-major window order
    idx = flat.argmax(axis=4).astype(np.int64)
    y = np.take_along_axis(flat, idx[..., None], axis=4)[..., 0]
    return np.ascontiguousarray(y), idx


def maxpool2_backward(dy, idx):
    n, c, ho, wo = dy.shape
    flat = np.zeros((n, c, ho, wo, 4), dtype=np.float32)
    np.put_along_axis(flat, idx[..., None], dy[..., None], axis=4)
    dx = flat.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * ho, 2 * wo)
    return np.ascontiguousarray(dx)
