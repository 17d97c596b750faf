"""Pure numpy implementations of the hot kernels.

Drop-in equivalents of the compiled routines in ``_core``. Same call
signatures, same iteration order, so results agree to rounding noise.
"""

import math

import numpy as np


def im2col(x, kh, kw):
    # x: (n, c, h, w) -> (n*h*w, kh*kw*c), stride 1, zero "same" padding.
    # Patch layout per row: (ki, kj, c) row-major, matching the
    # (kh*kw*cin, nf) kernel matrix view.
    n, c, h, w = x.shape
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = np.zeros((n, c, h + kh - 1, w + kw - 1), dtype=x.dtype)
    xp[:, :, ph:ph + h, pw:pw + w] = x
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    # windows: (n, c, h, w, kh, kw) -> (n, h, w, kh, kw, c)
    return np.ascontiguousarray(windows.transpose(0, 2, 3, 4, 5, 1)).reshape(
        n * h * w, kh * kw * c)


def col2im(cols, n, c, h, w, kh, kw):
    # Adjoint of im2col: scatter-add patch gradients back onto the image grid.
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    acc = np.zeros((n, c, h + kh - 1, w + kw - 1), dtype=cols.dtype)
    cols6 = cols.reshape(n, h, w, kh, kw, c).transpose(0, 5, 3, 4, 1, 2)
    # cols6: (n, c, kh, kw, h, w); fixed (ki, kj) order keeps the sum deterministic
    for ki in range(kh):
        for kj in range(kw):
            acc[:, :, ki:ki + h, kj:kj + w] += cols6[:, :, ki, kj]
    return acc[:, :, ph:ph + h, pw:pw + w]


def maxpool2_forward(x):
    # 2x2 window, stride 2. Returns pooled values and the flat in-window
    # argmax (0..3, row-major over the window; ties go to the first index).
    n, c, h, w = x.shape
    xr = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    xr = np.ascontiguousarray(xr).reshape(n, c, h // 2, w // 2, 4)
    idx = xr.argmax(axis=4)
    out = np.take_along_axis(xr, idx[..., None], axis=4)[..., 0]
    return out, idx.astype(np.int64)


def maxpool2_backward(gout, idx, h, w):
    # Route each output gradient to the input cell that won the max.
    n, c, oh, ow = gout.shape
    g = np.zeros((n, c, oh, ow, 4), dtype=gout.dtype)
    np.put_along_axis(g, idx[..., None], gout[..., None], axis=4)
    g = g.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return np.ascontiguousarray(g).reshape(n, c, h, w)


def jacobi_sweep(a, v, tol):
    # One cyclic pass of one-sided (Hestenes) rotations, in place. The
    # working vectors live in the ROWS of ``a`` (row p holds column p of the
    # matrix being decomposed, for contiguous access); ``v`` rows accumulate
    # the right rotations and may be None when only singular values are
    # wanted. Squared row norms are tracked incrementally (exact update
    # alpha' = alpha - t*gamma, beta' = beta + t*gamma) and refreshed on
    # every sweep. Returns the largest normalized correlation
    # |a_p . a_q| / (|a_p| |a_q|) seen before rotating; the caller sweeps
    # until that drops below ``tol``.
    n = a.shape[0]
    norms = np.einsum("ij,ij->i", a, a)
    off = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            alpha = norms[p]
            beta = norms[q]
            if alpha == 0.0 or beta == 0.0:
                continue
            gamma = float(a[p] @ a[q])
            ratio = abs(gamma) / math.sqrt(alpha * beta)
            if ratio > off:
                off = ratio
            if ratio <= tol:
                continue
            zeta = (beta - alpha) / (2.0 * gamma)
            t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
            cs = 1.0 / math.sqrt(1.0 + t * t)
            sn = cs * t
            rotated = cs * a[p] - sn * a[q]
            a[q] = sn * a[p] + cs * a[q]
            a[p] = rotated
            norms[p] = alpha - t * gamma
            norms[q] = beta + t * gamma
            if v is not None:
                rotated = cs * v[p] - sn * v[q]
                v[q] = sn * v[p] + cs * v[q]
                v[p] = rotated
    return off
