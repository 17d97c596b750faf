"""Minibatch optimizers: plain SGD, SGD with momentum, and an
adaptive-moment update (bias-corrected first/second moment estimates).

An optimizer is bound to a fixed, ordered list of parameter arrays and
updates them in place; state buffers are keyed by position, so the same
ordering must be used on every step (the training engine guarantees it).
"""

import numpy as np

from .exceptions import ValidationError


class Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


class SgdMomentum:
    def __init__(self, lr, momentum=0.9):
        self.lr = lr
        self.momentum = momentum
        self._velocity = None

    def step(self, params, grads):
        if self._velocity is None:
            self._velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self._velocity):
            v *= self.momentum
            v += g
            p -= self.lr * v


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = None
        self._v = None
        self._t = 0

    def step(self, params, grads):
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        c1 = 1.0 - self.beta1 ** self._t
        c2 = 1.0 - self.beta2 ** self._t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


OPTIMIZERS = {"sgd": Sgd, "sgd_momentum": SgdMomentum, "adam": Adam}


def make_optimizer(name, lr):
    if lr <= 0.0:
        raise ValidationError(f"learning rate must be positive, got {lr}")
    if name not in OPTIMIZERS:
        raise ValidationError(
            f"unknown optimizer {name!r}; want one of {sorted(OPTIMIZERS)}")
    return OPTIMIZERS[name](lr)
