# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: conv patch gather/scatter, 2x2 maxpool, Jacobi sweeps.

Mirrors condlab.kernels._fallback exactly (same signatures, same iteration
order); see that module for the semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport copysign, fabs, sqrt

cnp.import_array()


def im2col(x, Py_ssize_t kh, Py_ssize_t kw):
    cdef double[:, :, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], c = xv.shape[1], h = xv.shape[2], w = xv.shape[3]
    cdef Py_ssize_t ph = (kh - 1) // 2, pw = (kw - 1) // 2
    out = np.zeros((n * h * w, kh * kw * c), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t ni, i, j, ki, kj, ci, row, col, si, sj
    with nogil:
        for ni in range(n):
            for i in range(h):
                for j in range(w):
                    row = (ni * h + i) * w + j
                    for ki in range(kh):
                        si = i + ki - ph
                        if si < 0 or si >= h:
                            continue
                        for kj in range(kw):
                            sj = j + kj - pw
                            if sj < 0 or sj >= w:
                                continue
                            col = (ki * kw + kj) * c
                            for ci in range(c):
                                o[row, col + ci] = xv[ni, ci, si, sj]
    return out


def col2im(cols, Py_ssize_t n, Py_ssize_t c, Py_ssize_t h, Py_ssize_t w,
           Py_ssize_t kh, Py_ssize_t kw):
    cdef double[:, ::1] cv = np.ascontiguousarray(cols, dtype=np.float64)
    cdef Py_ssize_t ph = (kh - 1) // 2, pw = (kw - 1) // 2
    out = np.zeros((n, c, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t ni, i, j, ki, kj, ci, row, col, si, sj
    with nogil:
        for ni in range(n):
            for i in range(h):
                for j in range(w):
                    row = (ni * h + i) * w + j
                    for ki in range(kh):
                        si = i + ki - ph
                        if si < 0 or si >= h:
                            continue
                        for kj in range(kw):
                            sj = j + kj - pw
                            if sj < 0 or sj >= w:
                                continue
                            col = (ki * kw + kj) * c
                            for ci in range(c):
                                o[ni, ci, si, sj] += cv[row, col + ci]
    return out


def maxpool2_forward(x):
    cdef double[:, :, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], c = xv.shape[1], h = xv.shape[2], w = xv.shape[3]
    cdef Py_ssize_t oh = h // 2, ow = w // 2
    out = np.empty((n, c, oh, ow), dtype=np.float64)
    idx = np.empty((n, c, oh, ow), dtype=np.int64)
    cdef double[:, :, :, ::1] o = out
    cdef long long[:, :, :, ::1] ix = idx
    cdef Py_ssize_t ni, ci, i, j, di, dj, best
    cdef double val, bestval
    with nogil:
        for ni in range(n):
            for ci in range(c):
                for i in range(oh):
                    for j in range(ow):
                        best = 0
                        bestval = xv[ni, ci, 2 * i, 2 * j]
                        for di in range(2):
                            for dj in range(2):
                                val = xv[ni, ci, 2 * i + di, 2 * j + dj]
                                if val > bestval:
                                    bestval = val
                                    best = 2 * di + dj
                        o[ni, ci, i, j] = bestval
                        ix[ni, ci, i, j] = best
    return out, idx


def maxpool2_backward(gout, idx, Py_ssize_t h, Py_ssize_t w):
    cdef double[:, :, :, ::1] gv = np.ascontiguousarray(gout, dtype=np.float64)
    cdef long long[:, :, :, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t n = gv.shape[0], c = gv.shape[1], oh = gv.shape[2], ow = gv.shape[3]
    out = np.zeros((n, c, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t ni, ci, i, j, k
    with nogil:
        for ni in range(n):
            for ci in range(c):
                for i in range(oh):
                    for j in range(ow):
                        k = ix[ni, ci, i, j]
                        o[ni, ci, 2 * i + k // 2, 2 * j + k % 2] += gv[ni, ci, i, j]
    return out


def jacobi_sweep(a, v, double tol):
    cdef double[:, ::1] av = a
    cdef double[:, ::1] vv
    cdef bint has_v = v is not None
    if has_v:
        vv = v
    cdef Py_ssize_t n = av.shape[0], m = av.shape[1], nv = 0
    if has_v:
        nv = vv.shape[1]
    norms_arr = np.einsum("ij,ij->i", np.asarray(a), np.asarray(a))
    cdef double[::1] norms = np.ascontiguousarray(norms_arr, dtype=np.float64)
    cdef Py_ssize_t p, q, i
    cdef double off = 0.0
    cdef double alpha, beta, gamma, ratio, zeta, t, cs, sn, tmp
    with nogil:
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = norms[p]
                beta = norms[q]
                if alpha == 0.0 or beta == 0.0:
                    continue
                gamma = 0.0
                for i in range(m):
                    gamma += av[p, i] * av[q, i]
                ratio = fabs(gamma) / sqrt(alpha * beta)
                if ratio > off:
                    off = ratio
                if ratio <= tol:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = cs * t
                for i in range(m):
                    tmp = cs * av[p, i] - sn * av[q, i]
                    av[q, i] = sn * av[p, i] + cs * av[q, i]
                    av[p, i] = tmp
                norms[p] = alpha - t * gamma
                norms[q] = beta + t * gamma
                if has_v:
                    for i in range(nv):
                        tmp = cs * vv[p, i] - sn * vv[q, i]
                        vv[q, i] = sn * vv[p, i] + cs * vv[q, i]
                        vv[p, i] = tmp
    return off
