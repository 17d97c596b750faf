"""Gradient-sign attacks and the minimum-singular-direction probe.

All attacks operate on inputs living in [0,1] per pixel and promise the
l-infinity budget ||x_adv - x|| <= eps regardless of clipping. Gradients
are taken in eval mode (dropout off), so fgsm/bim are deterministic and
rand_fgsm is deterministic given its seed. sign() is three-valued:
zero-gradient pixels are left untouched.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg, nn
from .exceptions import DimensionError, ValidationError

# Default iteration counts per budget for the iterated attack; other
# budgets need an explicit n.
BIM_ITERS = {0.025: 2, 0.05: 3, 0.1: 6, 0.15: 9}

DEFAULT_BIM_ALPHA = 0.025


def bim_iter_count(eps):
    for k, n in BIM_ITERS.items():
        if abs(eps - k) <= 1e-12:
            return n
    raise ValidationError(
        f"no default iteration count for eps={eps}; pass iters explicitly")


ATTACK_KINDS = ("fgsm", "bim", "rand_fgsm", "min_singular")


@dataclass
class AttackSpec:
    """Validated attack configuration.

    ``alpha`` is the noise step (rand_fgsm) or per-iteration step (bim);
    ``iters`` only applies to bim. rand_fgsm requires alpha < eps, since
    the gradient step gets the remaining eps - alpha budget; left unset it
    resolves to eps/2.
    """

    kind: str
    eps: float = 0.0
    alpha: float = None
    iters: int = None
    clip_to_domain: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValidationError(
                f"unknown attack kind {self.kind!r}; want one of {ATTACK_KINDS}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValidationError(f"eps must lie in [0,1], got {self.eps}")
        if self.alpha is not None and self.alpha < 0.0:
            raise ValidationError(f"alpha must be non-negative, got {self.alpha}")
        if self.iters is not None and self.iters < 1:
            raise ValidationError(f"iters must be >= 1, got {self.iters}")
        if self.kind == "rand_fgsm":
            a = self.resolved_alpha()
            if a > 0.0 and a >= self.eps:
                raise ValidationError(
                    f"rand_fgsm needs alpha < eps, got alpha={a} eps={self.eps}")

    def resolved_alpha(self):
        if self.alpha is not None:
            return float(self.alpha)
        if self.kind == "rand_fgsm":
            return self.eps / 2.0
        if self.kind == "bim":
            return DEFAULT_BIM_ALPHA
        return 0.0

    def resolved_iters(self):
        if self.iters is not None:
            return int(self.iters)
        return bim_iter_count(self.eps)


def _domain_checked(x):
    x = nn.as_input(x)
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValidationError("attack inputs must lie in [0,1] per pixel")
    return x


def fgsm(net, x, y, eps, clip=True):
    """x + eps * sign(grad_x J), optionally clamped back into [0,1]."""
    if eps < 0.0:
        raise ValidationError(f"eps must be non-negative, got {eps}")
    x = _domain_checked(x)
    adv = x + eps * np.sign(nn.input_gradient(net, x, y))
    if clip:
        np.clip(adv, 0.0, 1.0, out=adv)
    return adv


def bim(net, x, y, eps, alpha=DEFAULT_BIM_ALPHA, n=None):
    """Iterated sign steps of size alpha, re-clipped into the eps-ball
    around x intersected with [0,1] after every step."""
    if eps < 0.0 or alpha < 0.0:
        raise ValidationError("eps and alpha must be non-negative")
    if n is None:
        n = bim_iter_count(eps)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    x = _domain_checked(x)
    lo = np.maximum(x - eps, 0.0)
    hi = np.minimum(x + eps, 1.0)
    cur = x
    for _ in range(int(n)):
        step = alpha * np.sign(nn.input_gradient(net, cur, y))
        cur = np.clip(cur + step, lo, hi)
    return cur


def rand_fgsm(net, x, y, eps, alpha=None, seed=0):
    """Random sign-noise step of size alpha, then fgsm with the remaining
    eps - alpha budget from the displaced point; final clamp to [0,1]."""
    if alpha is None:
        alpha = eps / 2.0
    if alpha < 0.0:
        raise ValidationError(f"alpha must be non-negative, got {alpha}")
    if alpha > 0.0 and alpha >= eps:
        raise ValidationError(
            f"rand_fgsm needs alpha < eps, got alpha={alpha} eps={eps}")
    x = _domain_checked(x)
    rng = np.random.default_rng(seed)
    shifted = x + alpha * np.sign(rng.standard_normal(x.shape))
    adv = shifted + (eps - alpha) * np.sign(nn.input_gradient(net, shifted, y))
    return np.clip(adv, 0.0, 1.0)


@dataclass
class MinSingularResult:
    """x_prime = x + scale * v_min and the linear prediction of the output
    change, scale * sigma_min * u_min. ``degenerate`` flags a (near-)tied
    smallest singular value: the direction is then one of many."""

    x_prime: np.ndarray
    predicted_delta: np.ndarray
    sigma: float
    degenerate: bool


def min_singular_perturb(w, x, scale, clip=False):
    """Perturb x along the right singular vector of the smallest singular
    value of w. Unclipped, w @ x_prime - w @ x equals predicted_delta to
    rounding; clipping trades that identity for domain validity."""
    w = linalg.as_matrix(w)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != w.shape[1]:
        raise DimensionError(
            f"x must be a vector of length {w.shape[1]}, got shape {x.shape}")
    triple = linalg.min_singular_triple(w)
    x_prime = x + scale * triple.v
    if clip:
        x_prime = np.clip(x_prime, 0.0, 1.0)
    return MinSingularResult(
        x_prime=x_prime,
        predicted_delta=scale * triple.sigma * triple.u,
        sigma=triple.sigma,
        degenerate=triple.degenerate,
    )


def run(net, x, y, spec):
    """Dispatch a batch attack per an AttackSpec. min_singular is a
    per-matrix probe, not a batch attack, and is not dispatchable here."""
    if spec.kind == "fgsm":
        return fgsm(net, x, y, spec.eps, clip=spec.clip_to_domain)
    if spec.kind == "bim":
        return bim(net, x, y, spec.eps, alpha=spec.resolved_alpha(),
                   n=spec.resolved_iters())
    if spec.kind == "rand_fgsm":
        return rand_fgsm(net, x, y, spec.eps, alpha=spec.resolved_alpha(),
                         seed=spec.seed)
    raise ValidationError(f"attack kind {spec.kind!r} is not batch-dispatchable")
