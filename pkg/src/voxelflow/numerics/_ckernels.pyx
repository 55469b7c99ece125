# Compiled kernels for the convolution / pooling hot loops.
# Semantics mirror _npkernels exactly; see that module for the reference
# implementation. Loops hoist the kernel weight and precompute the valid
# output range per kernel offset so the inner loops are branch-free.

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline int imax(int a, int b) nogil:
    return a if a > b else b


cdef inline int imin(int a, int b) nogil:
    return a if a < b else b


def conv2d_forward(cnp.ndarray[cnp.float32_t, ndim=4] x,
                   cnp.ndarray[cnp.float32_t, ndim=4] w,
                   int stride, int pad):
    cdef int n = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef int cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef int ho = (h + 2 * pad - kh) // stride + 1
    cdef int wo = (wd + 2 * pad - kw) // stride + 1
    cdef cnp.ndarray[cnp.float32_t, ndim=4] y = np.zeros((n, cout, ho, wo), dtype=np.float32)
    cdef float[:, :, :, :] xv = np.ascontiguousarray(x)
    cdef float[:, :, :, :] wv = np.ascontiguousarray(w)
    cdef float[:, :, :, :] yv = y
    cdef int b, co, ci, ki, kj, i, j, i0, i1, j0, j1, ii, jj
    cdef float wval
    with nogil:
        for b in range(n):
            for co in range(cout):
                for ci in range(cin):
                    for ki in range(kh):
                        if h - 1 - ki + pad < 0:
                            continue
                        i0 = imax(0, (pad - ki + stride - 1) // stride)
                        i1 = imin(ho, (h - 1 - ki + pad) // stride + 1)
                        for kj in range(kw):
                            if wd - 1 - kj + pad < 0:
                                continue
                            j0 = imax(0, (pad - kj + stride - 1) // stride)
                            j1 = imin(wo, (wd - 1 - kj + pad) // stride + 1)
                            wval = wv[co, ci, ki, kj]
                            for i in range(i0, i1):
                                ii = i * stride + ki - pad
                                jj = j0 * stride + kj - pad
                                for j in range(j0, j1):
                                    yv[b, co, i, j] += wval * xv[b, ci, ii, jj]
                                    jj += stride
    return y


def conv2d_backward(cnp.ndarray[cnp.float32_t, ndim=4] dy,
                    cnp.ndarray[cnp.float32_t, ndim=4] x,
                    cnp.ndarray[cnp.float32_t, ndim=4] w,
                    int stride, int pad):
    cdef int n = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef int cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef int ho = dy.shape[2], wo = dy.shape[3]
    cdef cnp.ndarray[cnp.float32_t, ndim=4] dx = np.zeros((n, cin, h, wd), dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=4] dw = np.zeros((cout, cin, kh, kw), dtype=np.float32)
    cdef float[:, :, :, :] dyv = np.ascontiguousarray(dy)
    cdef float[:, :, :, :] xv = np.ascontiguousarray(x)
    cdef float[:, :, :, :] wv = np.ascontiguousarray(w)
    cdef float[:, :, :, :] dxv = dx
    cdef float[:, :, :, :] dwv = dw
    cdef int b, co, ci, ki, kj, i, j, i0, i1, j0, j1, ii, jj
    cdef float wval, g, acc
    with nogil:
        for b in range(n):
            for co in range(cout):
                for ci in range(cin):
                    for ki in range(kh):
                        if h - 1 - ki + pad < 0:
                            continue
                        i0 = imax(0, (pad - ki + stride - 1) // stride)
                        i1 = imin(ho, (h - 1 - ki + pad) // stride + 1)
                        for kj in range(kw):
                            if wd - 1 - kj + pad < 0:
                                continue
                            j0 = imax(0, (pad - kj + stride - 1) // stride)
                            j1 = imin(wo, (wd - 1 - kj + pad) // stride + 1)
                            wval = wv[co, ci, ki, kj]
                            acc = 0.0
                            for i in range(i0, i1):
                                ii = i * stride + ki - pad
                                jj = j0 * stride + kj - pad
                                for j in range(j0, j1):
                                    g = dyv[b, co, i, j]
                                    acc += g * xv[b, ci, ii, jj]
                                    dxv[b, ci, ii, jj] += g * wval
                                    jj += stride
                            dwv[co, ci, ki, kj] += acc
    return dx, dw


def maxpool2_forward(cnp.ndarray[cnp.float32_t, ndim=4] x):
    cdef int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef int ho = h // 2, wo = w // 2
    cdef cnp.ndarray[cnp.float32_t, ndim=4] y = np.empty((n, c, ho, wo), dtype=np.float32)
    cdef cnp.ndarray[cnp.int64_t, ndim=4] idx = np.empty((n, c, ho, wo), dtype=np.int64)
    cdef float[:, :, :, :] xv = np.ascontiguousarray(x)
    cdef float[:, :, :, :] yv = y
    cdef cnp.int64_t[:, :, :, :] iv = idx
    cdef int b, ci, i, j, di, dj, k, besti
    cdef float best, v
    with nogil:
        for b in range(n):
            for ci in range(c):
                for i in range(ho):
                    for j in range(wo):
                        best = xv[b, ci, 2 * i, 2 * j]
                        besti = 0
                        k = 0
                        for di in range(2):
                            for dj in range(2):
                                v = xv[b, ci, 2 * i + di, 2 * j + dj]
                                # strict > keeps the first occurrence on ties
                                if v > best:
                                    best = v
                                    besti = k
                                k += 1
                        yv[b, ci, i, j] = best
                        iv[b, ci, i, j] = besti
    return y, idx


def maxpool2_backward(cnp.ndarray[cnp.float32_t, ndim=4] dy,
                      cnp.ndarray[cnp.int64_t, ndim=4] idx):
    cdef int n = dy.shape[0], c = dy.shape[1], ho = dy.shape[2], wo = dy.shape[3]
    cdef cnp.ndarray[cnp.float32_t, ndim=4] dx = np.zeros((n, c, 2 * ho, 2 * wo), dtype=np.float32)
    cdef float[:, :, :, :] dyv = np.ascontiguousarray(dy)
    cdef cnp.int64_t[:, :, :, :] iv = idx
    cdef float[:, :, :, :] dxv = dx
    cdef int b, ci, i, j, k
    with nogil:
        for b in range(n):
            for ci in range(c):
                for i in range(ho):
                    for j in range(wo):
                        k = <int> iv[b, ci, i, j]
                        dxv[b, ci, 2 * i + k // 2, 2 * j + k % 2] = dyv[b, ci, i, j]
    return dx
