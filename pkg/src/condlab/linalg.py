"""Dense linear algebra for weight conditioning analysis.

Matrices are plain 2-D float64 numpy arrays. Everything here is built on a
one-sided cyclic Jacobi SVD (accurate for the small and mid-size matrices
that network layers produce, and simple enough to trust), with the rotation
sweeps delegated to :mod:`condlab.kernels`.

All functions are pure: no shared mutable state, safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import ConditioningError, DimensionError, ValidationError

# Convergence threshold on normalized column correlations, and the sweep cap.
JACOBI_TOL = 1e-12
MAX_SWEEPS = 60

# sigma_min below RANK_TOL * sigma_max counts as singular: dividing by what
# is left at that point would just amplify round-off.
RANK_TOL = 1e-12

# Smallest two singular values closer than this (relative to sigma_max) are
# treated as tied when picking the minimal singular direction.
DEGENERATE_TOL = 1e-10


def as_matrix(a):
    """Validate ``a`` as a nonempty 2-D matrix of finite float64 entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValidationError("matrix entries must be finite")
    return m


@dataclass
class SingularTriple:
    """One (sigma, u, v) with A v = sigma u, unit-norm u and v.

    ``degenerate`` is set when the smallest singular value is tied with the
    next one, in which case the returned direction is one valid choice among
    many.
    """

    sigma: float
    u: np.ndarray
    v: np.ndarray
    degenerate: bool = False


@dataclass
class CondReport:
    """Conditioning summary for one named weight matrix."""

    layer_name: str
    shape: tuple
    sigma_max: float
    sigma_min: float
    kappa: float  # math.inf when numerically singular


def svd(a, want_vectors=True):
    """One-sided cyclic Jacobi SVD.

    Returns ``(sigmas, u, v)`` with ``sigmas`` descending of length
    ``k = min(rows, cols)``, ``u`` of shape ``(rows, k)`` and ``v`` of shape
    ``(cols, k)`` such that ``a @ v[:, i] == sigmas[i] * u[:, i]``. The sign
    of each pair is fixed by making the first nonzero component of ``v``
    positive. With ``want_vectors=False`` only the values are computed and
    ``u``/``v`` are None.
    """
    a = as_matrix(a)
    transposed = a.shape[0] < a.shape[1]
    work = a.T if transposed else a
    nrows, ncols = work.shape

    # Row p of `cols` holds working column p, contiguous for the sweep kernel.
    # Always copy: for wide inputs work.T aliases the caller's array and the
    # sweep mutates its buffer in place.
    cols = work.T.copy()
    vrows = np.eye(ncols) if want_vectors else None
    for _ in range(MAX_SWEEPS):
        off = kernels.jacobi_sweep(cols, vrows, JACOBI_TOL)
        if off <= JACOBI_TOL:
            break

    sigmas = np.sqrt(np.einsum("ij,ij->i", cols, cols))
    order = np.argsort(-sigmas, kind="stable")
    sigmas = sigmas[order]
    if not want_vectors:
        return sigmas, None, None

    u = np.empty((nrows, ncols))
    v = np.empty((ncols, ncols))
    empty = []
    for rank, j in enumerate(order):
        v[:, rank] = vrows[j]
        if sigmas[rank] > 0.0:
            u[:, rank] = cols[j] / sigmas[rank]
        else:
            empty.append(rank)
    # Exactly-zero columns leave u undefined; fill them with an orthonormal
    # completion so every triple still has a unit left vector.
    unfilled = set(empty)
    for rank in empty:
        u[:, rank] = _complete_orthonormal(u, exclude=unfilled)
        unfilled.discard(rank)
    _fix_signs(u, v)
    if transposed:
        u, v = v, u
    return sigmas, u, v


def _complete_orthonormal(u, exclude):
    """Unit vector orthogonal to every column of ``u`` not in ``exclude``."""
    filled = [j for j in range(u.shape[1]) if j not in exclude]
    basis = u[:, filled]
    # The basis vector e_i with the smallest projection onto the filled
    # columns leaves the largest residual: |e_i - B B^T e_i|^2 = 1 - |B[i]|^2.
    row_sq = np.einsum("ij,ij->i", basis, basis)
    best = int(np.argmin(row_sq))
    vec = -basis @ basis[best]
    vec[best] += 1.0
    return vec / np.linalg.norm(vec)


def _fix_signs(u, v):
    for j in range(v.shape[1]):
        nz = np.nonzero(np.abs(v[:, j]) > 1e-12)[0]
        if nz.size and v[nz[0], j] < 0.0:
            v[:, j] = -v[:, j]
            u[:, j] = -u[:, j]


def singular_values(a):
    """All ``min(rows, cols)`` singular values, descending."""
    sigmas, _, _ = svd(a, want_vectors=False)
    return sigmas


def spectral_norm(a):
    """Largest singular value: max over nonzero x of |Ax| / |x|."""
    return float(singular_values(a)[0])


def condition_number(a):
    """Ratio of largest to smallest singular value; inf when singular.

    Always >= 1 when finite. Orthogonal matrices give exactly 1; a zero or
    rank-deficient matrix gives ``math.inf`` rather than an error.
    """
    sigmas = singular_values(a)
    smax = float(sigmas[0])
    smin = float(sigmas[-1])
    if smax == 0.0 or smin < RANK_TOL * smax:
        return math.inf
    return smax / smin


def min_singular_triple(a):
    """The (sigma, u, v) triple for the smallest singular value.

    ``v`` is the input direction the matrix attenuates the most; it is the
    least-squares solution direction of ``A x = 0`` when A is singular.
    """
    sigmas, u, v = svd(a)
    sigma = float(sigmas[-1])
    degenerate = sigmas.size > 1 and (
        float(sigmas[-2]) - sigma <= DEGENERATE_TOL * max(1.0, float(sigmas[0]))
    )
    return SingularTriple(sigma, u[:, -1].copy(), v[:, -1].copy(), degenerate)


def amplification_ratio(w, x, dx):
    """Relative output change and its condition-number bound.

    For a square nonsingular ``w``, returns ``(lhs, bound)`` where
    ``lhs = |W dx| / |W x|`` and ``bound = kappa(W) * |dx| / |x|``; the
    bound always dominates, which is exactly why driving kappa toward 1
    limits what an input perturbation can do to the layer output.
    """
    w = as_matrix(w)
    if w.shape[0] != w.shape[1]:
        raise DimensionError(f"w must be square, got shape {w.shape}")
    x = np.asarray(x, dtype=np.float64).ravel()
    dx = np.asarray(dx, dtype=np.float64).ravel()
    if x.size != w.shape[1] or dx.size != w.shape[1]:
        raise DimensionError("x and dx must match the matrix dimension")
    if not (np.isfinite(x).all() and np.isfinite(dx).all()):
        raise ValidationError("x and dx must be finite")
    kappa = condition_number(w)
    if not math.isfinite(kappa):
        raise ConditioningError("w is singular; the bound is vacuous")
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        raise ValidationError("x must be nonzero")
    norm_wx = float(np.linalg.norm(w @ x))
    if norm_wx == 0.0:
        raise ConditioningError("W x vanished; w is numerically singular")
    lhs = float(np.linalg.norm(w @ dx)) / norm_wx
    bound = kappa * float(np.linalg.norm(dx)) / norm_x
    return lhs, bound
