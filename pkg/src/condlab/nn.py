"""Feed-forward networks with hand-derived backpropagation.

Layer kinds: dense, conv2d (stride 1, zero "same" padding), relu,
maxpool2x2 (stride 2, first-index tie-break), inverted dropout, flatten.
The loss is mean softmax cross-entropy over the batch. Every gradient,
for parameters and for the input, is derived per layer kind and checked
against central finite differences in the test suite.

Image batches are float64 arrays of shape (n, c, h, w); already-flat
inputs of shape (n, d) are accepted too and pass through ``flatten``
unchanged.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, linalg
from .exceptions import DimensionError, ValidationError

ARCH_NAMES = ("A", "B", "C")


def as_input(x):
    """Validate a batch: float64, 2-D (n, d) or 4-D (n, c, h, w), finite."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (2, 4):
        raise DimensionError(
            f"input must be (n, d) or (n, c, h, w), got shape {x.shape}")
    if x.shape[0] == 0:
        raise DimensionError("empty batch")
    if not np.all(np.isfinite(x)):
        raise ValidationError("input contains non-finite values")
    return x


def as_labels(y, num_classes):
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionError(f"labels must be 1-D, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        yf = np.asarray(y, dtype=np.float64)
        if not np.all(yf == np.round(yf)):
            raise ValidationError("labels must be integers")
        y = yf.astype(np.int64)
    else:
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise ValidationError(
            f"labels must lie in [0, {num_classes}), got range "
            f"[{y.min()}, {y.max()}]")
    return y


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, y):
    """Mean negative log-likelihood of the true class, with its logit grad."""
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -float(logp[np.arange(n), y].mean())
    dlogits = np.exp(logp)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    return loss, dlogits


class Dense:
    kind = "dense"

    def __init__(self, in_dim, out_dim):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.weight = np.zeros((self.in_dim, self.out_dim))
        self.bias = np.zeros(self.out_dim)

    def init_params(self, rng):
        limit = np.sqrt(6.0 / self.in_dim)
        self.weight = rng.uniform(-limit, limit, size=self.weight.shape)
        self.bias = np.zeros(self.out_dim)

    def out_shape(self, in_shape):
        if in_shape is None:
            return ("flat", self.out_dim)
        if in_shape[0] != "flat" or in_shape[1] != self.in_dim:
            raise DimensionError(
                f"dense {self.in_dim}x{self.out_dim} cannot follow {in_shape}")
        return ("flat", self.out_dim)

    def forward(self, x, mode, rng):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"dense expects (n, {self.in_dim}), got {x.shape}")
        return x @ self.weight + self.bias, x

    def backward(self, dout, cache):
        x = cache
        dx = dout @ self.weight.T
        return dx, {"weight": x.T @ dout, "bias": dout.sum(axis=0)}


class Conv2d:
    """Stride-1 convolution with zero "same" padding.

    The kernel is stored as (kh, kw, cin, nf); its flattened
    (kh*kw*cin, nf) matrix view is what the conditioning analysis and
    the regularizer operate on.
    """

    kind = "conv2d"

    def __init__(self, kh, kw, cin, nf):
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValidationError("same-padding conv needs odd kernel dims")
        self.kh, self.kw, self.cin, self.nf = int(kh), int(kw), int(cin), int(nf)
        self.weight = np.zeros((self.kh, self.kw, self.cin, self.nf))
        self.bias = np.zeros(self.nf)

    def init_params(self, rng):
        limit = np.sqrt(6.0 / (self.kh * self.kw * self.cin))
        self.weight = rng.uniform(-limit, limit, size=self.weight.shape)
        self.bias = np.zeros(self.nf)

    def out_shape(self, in_shape):
        if in_shape is None:
            return None
        if in_shape[0] != "img" or in_shape[1] != self.cin:
            raise DimensionError(
                f"conv expects {self.cin} input channels, got {in_shape}")
        return ("img", self.nf, in_shape[2], in_shape[3])

    def forward(self, x, mode, rng):
        if x.ndim != 4 or x.shape[1] != self.cin:
            raise DimensionError(
                f"conv expects (n, {self.cin}, h, w), got {x.shape}")
        n, _, h, w = x.shape
        cols = kernels.im2col(x, self.kh, self.kw)
        out = cols @ self.weight.reshape(-1, self.nf) + self.bias
        out = out.reshape(n, h, w, self.nf).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(out), (cols, x.shape)

    def backward(self, dout, cache):
        cols, xshape = cache
        n, c, h, w = xshape
        dflat = np.ascontiguousarray(dout.transpose(0, 2, 3, 1)).reshape(
            n * h * w, self.nf)
        dw = (cols.T @ dflat).reshape(self.weight.shape)
        db = dflat.sum(axis=0)
        dcols = dflat @ self.weight.reshape(-1, self.nf).T
        dx = kernels.col2im(dcols, n, c, h, w, self.kh, self.kw)
        return dx, {"weight": dw, "bias": db}


class Relu:
    kind = "relu"

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, mode, rng):
        return np.maximum(x, 0.0), x > 0.0

    def backward(self, dout, cache):
        return dout * cache, None


class MaxPool2x2:
    kind = "maxpool2x2"

    def out_shape(self, in_shape):
        if in_shape is None:
            return None
        if in_shape[0] != "img" or in_shape[2] % 2 or in_shape[3] % 2:
            raise DimensionError(f"2x2 pool needs even image dims, got {in_shape}")
        return ("img", in_shape[1], in_shape[2] // 2, in_shape[3] // 2)

    def forward(self, x, mode, rng):
        if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
            raise DimensionError(
                f"2x2 pool expects even (n, c, h, w), got {x.shape}")
        out, idx = kernels.maxpool2_forward(x)
        return out, (idx, x.shape[2], x.shape[3])

    def backward(self, dout, cache):
        idx, h, w = cache
        return kernels.maxpool2_backward(dout, idx, h, w), None


class Dropout:
    """Inverted dropout: train-mode activations are rescaled by 1/(1-rate)
    so the eval-mode forward needs no correction."""

    kind = "dropout"

    def __init__(self, rate=0.5):
        rate = float(rate)
        if not 0.0 <= rate < 1.0:
            raise ValidationError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, mode, rng):
        if mode != "train" or self.rate == 0.0:
            return x, None
        keep = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * keep, keep

    def backward(self, dout, cache):
        if cache is None:
            return dout, None
        return dout * cache, None


class Flatten:
    kind = "flatten"

    def out_shape(self, in_shape):
        if in_shape is None:
            return None
        if in_shape[0] == "flat":
            return in_shape
        return ("flat", in_shape[1] * in_shape[2] * in_shape[3])

    def forward(self, x, mode, rng):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache), None


PARAMETERIZED = (Dense, Conv2d)


class Network:
    """Ordered layer list with a class count. Construction propagates
    symbolic shapes so incompatible layers fail immediately, not at the
    first forward pass."""

    def __init__(self, layers, name="custom", num_classes=10, input_shape=None):
        self.name = name
        self.layers = list(layers)
        self.num_classes = int(num_classes)
        self.input_shape = input_shape
        shape = None if input_shape is None else ("img", *input_shape)
        for layer in self.layers:
            shape = layer.out_shape(shape)
        if shape is not None and shape != ("flat", self.num_classes):
            raise DimensionError(
                f"network output shape {shape} does not match "
                f"{self.num_classes} classes")

    def parameterized(self):
        return [l for l in self.layers if isinstance(l, PARAMETERIZED)]


def build_network(arch, seed=0):
    """Construct one of the three fixed architectures.

    A: conv 5x5x1x32, relu, pool, conv 5x5x32x64, relu, pool, flatten,
       dense 3136x1024, relu, dropout 0.5, dense 1024x10.
    B: flatten, dense 784x256, relu, dense 256x256, relu, dense 256x10.
    C: flatten, dense 784x200, relu, dense 200x200, relu, dense 200x10.

    Weights are He-uniform, biases zero, drawn from a generator seeded
    with ``seed`` in layer order.
    """
    if arch == "A":
        layers = [
            Conv2d(5, 5, 1, 32), Relu(), MaxPool2x2(),
            Conv2d(5, 5, 32, 64), Relu(), MaxPool2x2(),
            Flatten(),
            Dense(3136, 1024), Relu(), Dropout(0.5),
            Dense(1024, 10),
        ]
    elif arch == "B":
        layers = [
            Flatten(),
            Dense(784, 256), Relu(),
            Dense(256, 256), Relu(),
            Dense(256, 10),
        ]
    elif arch == "C":
        layers = [
            Flatten(),
            Dense(784, 200), Relu(),
            Dense(200, 200), Relu(),
            Dense(200, 10),
        ]
    else:
        raise ValidationError(f"unknown architecture {arch!r}; want A, B or C")
    net = Network(layers, name=arch, num_classes=10, input_shape=(1, 28, 28))
    rng = np.random.default_rng(seed)
    for layer in net.parameterized():
        layer.init_params(rng)
    return net


def forward(net, x, mode="eval", seed=0):
    """Run the network. Returns (logits, caches); ``caches`` feeds the
    backward pass. Dropout draws from a generator seeded with ``seed``
    and fires only in train mode, so eval outputs are bit-reproducible.
    """
    if mode not in ("train", "eval"):
        raise ValidationError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = as_input(x)
    rng = np.random.default_rng(seed)
    caches = []
    for layer in net.layers:
        x, cache = layer.forward(x, mode, rng)
        caches.append(cache)
    if x.ndim != 2 or x.shape[1] != net.num_classes:
        raise DimensionError(
            f"network produced shape {x.shape}, want (n, {net.num_classes})")
    return x, caches


@dataclass
class Gradients:
    """Backward-pass output: one dict per layer (None for parameter-free
    kinds) plus the gradient with respect to the input batch."""

    layers: list
    wrt_input: np.ndarray


def _backward(net, caches, dlogits):
    grads = [None] * len(net.layers)
    d = dlogits
    for i in range(len(net.layers) - 1, -1, -1):
        d, g = net.layers[i].backward(d, caches[i])
        grads[i] = g
    return Gradients(layers=grads, wrt_input=d)


def loss_and_grads(net, x, y, mode="train", seed=0):
    """Mean softmax cross-entropy and its exact gradients."""
    y = as_labels(y, net.num_classes)
    logits, caches = forward(net, x, mode=mode, seed=seed)
    if y.shape[0] != logits.shape[0]:
        raise DimensionError(
            f"{y.shape[0]} labels for a batch of {logits.shape[0]}")
    loss, dlogits = cross_entropy(logits, y)
    return loss, _backward(net, caches, dlogits)


def input_gradient(net, x, y):
    """Gradient of the mean cross-entropy with respect to the input batch.

    Always computed in eval mode so attacks built on it are deterministic.
    """
    _, grads = loss_and_grads(net, x, y, mode="eval")
    return grads.wrt_input


def logit_input_gradient(net, x, class_idx):
    """Per-sample gradient of one logit with respect to the input.

    ``class_idx`` is an array of class choices, one per sample; sample i
    receives the gradient of logit ``class_idx[i]``. Used by the label-only
    substitute-training loop to expand its synthetic set.
    """
    class_idx = as_labels(class_idx, net.num_classes)
    logits, caches = forward(net, x, mode="eval")
    if class_idx.shape[0] != logits.shape[0]:
        raise DimensionError(
            f"{class_idx.shape[0]} class choices for a batch of {logits.shape[0]}")
    seed_grad = np.zeros_like(logits)
    seed_grad[np.arange(logits.shape[0]), class_idx] = 1.0
    return _backward(net, caches, seed_grad).wrt_input


def conv_weight_matrix(layer):
    """The (kh*kw*cin, nf) matrix view of a conv kernel.

    Column j is filter j flattened in (kh, kw, cin) row-major order; the
    reshape is a bijection, so editing the view and reshaping back
    reconstructs the kernel exactly.
    """
    if getattr(layer, "kind", None) != "conv2d":
        raise ValidationError(
            f"conv_weight_matrix wants a conv2d layer, got {getattr(layer, 'kind', type(layer).__name__)}")
    return layer.weight.reshape(-1, layer.nf)


def weight_matrix(layer):
    """Whatever matrix the conditioning analysis should see for a layer."""
    if layer.kind == "dense":
        return layer.weight
    if layer.kind == "conv2d":
        return conv_weight_matrix(layer)
    raise ValidationError(f"layer kind {layer.kind!r} has no weight matrix")


def param_layer_names(net):
    """Stable names for the parameterized layers, in network order."""
    return [f"{i:02d}-{l.kind}" for i, l in enumerate(net.parameterized())]


def layer_condition_numbers(net):
    """Condition number of every parameterized layer's weight matrix.

    Returns (reports, max_kappa); conv kernels are analyzed through their
    matrix view. ``max_kappa`` is 0.0 for a network with no parameters.
    """
    reports = []
    for name, layer in zip(param_layer_names(net), net.parameterized()):
        mat = weight_matrix(layer)
        sig = linalg.singular_values(mat)
        kappa = linalg.condition_number(mat)
        reports.append(linalg.CondReport(
            layer_name=name,
            shape=mat.shape,
            sigma_max=float(sig[0]),
            sigma_min=float(sig[-1]),
            kappa=kappa,
        ))
    max_kappa = max((r.kappa for r in reports), default=0.0)
    return reports, max_kappa


def predict(net, x):
    logits, _ = forward(net, x, mode="eval")
    return logits.argmax(axis=1)


def accuracy(net, x, y):
    y = as_labels(y, net.num_classes)
    return float((predict(net, x) == y).mean())
