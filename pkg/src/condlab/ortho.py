"""Soft orthogonality penalty on column-normalized weight matrices.

Per layer the penalty is lam * ||W_hat^T W_hat - I||_F^2 with W_hat the
column-l2-normalized weight matrix (conv kernels through their
(kh*kw*cin, nf) view, so each column is one filter). Driving it down
pushes the normalized columns toward mutual orthogonality, which caps the
condition number of the layer. For wide matrices (rows < cols) exact
orthogonality is unattainable and the penalty bottoms out above zero;
that optimum is still the right target, no special casing.

The gradient is taken with respect to the raw weights, chain rule through
the normalization included, so the penalty is invariant to per-column
positive rescaling and the gradient reflects that.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, nn
from .exceptions import DegenerateInputError, ValidationError

ZERO_COLUMN_TOL = 0.0  # a column is "zero" only when its norm is exactly 0


@dataclass
class RegConfig:
    """Per-layer penalty weights. ``per_layer`` overrides ``default_lambda``
    by layer name (the names reported by layer_condition_numbers)."""

    enabled: bool = True
    default_lambda: float = 0.0
    per_layer: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.default_lambda < 0.0:
            raise ValidationError("default lambda must be non-negative")
        for name, lam in self.per_layer.items():
            if lam < 0.0:
                raise ValidationError(f"lambda for {name} must be non-negative")

    def lambda_for(self, layer_name):
        return float(self.per_layer.get(layer_name, self.default_lambda))


def l2_normalize_columns(w, return_zero_mask=False):
    """Scale every column of ``w`` to unit l2 norm.

    Zero columns cannot be normalized and are passed through unchanged;
    ask for ``return_zero_mask`` to learn which ones they were.
    """
    w = np.asarray(w, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->j", w, w))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    out = w / safe
    if return_zero_mask:
        return out, zero
    return out


def ortho_penalty(w, lam):
    """lam * ||W_hat^T W_hat - I||_F^2, zero iff the (nonzero) columns are
    mutually orthogonal."""
    if lam < 0.0:
        raise ValidationError("lambda must be non-negative")
    if lam == 0.0:
        return 0.0
    what = l2_normalize_columns(w)
    g = what.T @ what
    g[np.diag_indices_from(g)] -= 1.0
    return float(lam * np.einsum("ij,ij->", g, g))


def ortho_penalty_grad(w, lam):
    """Exact gradient of ortho_penalty with respect to the raw ``w``.

    With r_j = |w_j| and w_hat_j = w_j / r_j:
        dP/dW_hat = 4 W_hat (W_hat^T W_hat - I)
        dP/dw_j   = (I - w_hat_j w_hat_j^T) (dP/dW_hat)_j / r_j
    The projector is where column-scale invariance comes from: the radial
    component of the raw gradient is exactly zero.
    """
    if lam < 0.0:
        raise ValidationError("lambda must be non-negative")
    w = np.asarray(w, dtype=np.float64)
    if lam == 0.0:
        return np.zeros_like(w)
    what, zero = l2_normalize_columns(w, return_zero_mask=True)
    if zero.any():
        raise DegenerateInputError(
            "zero column: penalty gradient undefined through normalization")
    norms = np.sqrt(np.einsum("ij,ij->j", w, w))
    g = what.T @ what
    g[np.diag_indices_from(g)] -= 1.0
    d_hat = 4.0 * (what @ g)
    radial = np.einsum("ij,ij->j", what, d_hat)
    return lam * (d_hat - what * radial) / norms


def total_loss(classification_loss, net, cfg):
    """classification loss + sum of per-layer penalties.

    Returns (total, breakdown) where breakdown maps layer name to its
    weighted penalty; empty when the regularizer is disabled.
    """
    if not cfg.enabled:
        return float(classification_loss), {}
    breakdown = {}
    total = float(classification_loss)
    for name, layer in zip(nn.param_layer_names(net), net.parameterized()):
        pen = ortho_penalty(nn.weight_matrix(layer), cfg.lambda_for(name))
        breakdown[name] = pen
        total += pen
    return total, breakdown


def penalty_grads(net, cfg):
    """Per-layer weight gradients of the summed penalty, aligned with
    ``net.layers`` (None for parameter-free layers or lambda = 0). Conv
    gradients come back in kernel shape, ready to add to the
    classification gradients before the optimizer step."""
    out = [None] * len(net.layers)
    if not cfg.enabled:
        return out
    names = iter(nn.param_layer_names(net))
    for i, layer in enumerate(net.layers):
        if not isinstance(layer, nn.PARAMETERIZED):
            continue
        lam = cfg.lambda_for(next(names))
        if lam == 0.0:
            continue
        g = ortho_penalty_grad(nn.weight_matrix(layer), lam)
        out[i] = g.reshape(layer.weight.shape)
    return out


def resolve_lambdas(net, lambda_base, lo=1.0, hi=4.0):
    """Heuristic per-layer weights from the freshly initialized network:
    lambda = lambda_base * clamp(log10(kappa_init), lo, hi), so layers
    that start badly conditioned get pushed harder. Returns a RegConfig;
    override per_layer entries to taste."""
    if lambda_base < 0.0:
        raise ValidationError("lambda_base must be non-negative")
    reports, _ = nn.layer_condition_numbers(net)
    per_layer = {}
    for r in reports:
        scale = hi if math.isinf(r.kappa) else min(max(math.log10(r.kappa), lo), hi)
        per_layer[r.layer_name] = lambda_base * scale
    return RegConfig(enabled=lambda_base > 0.0,
                     default_lambda=lambda_base, per_layer=per_layer)
