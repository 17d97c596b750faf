"""Training engine and evaluation.

Plain and adversarial training share one loop: per batch the loss is
(1 - mix) * CE(clean) + mix * CE(fgsm batch) + orthogonality penalties,
with the adversarial batch regenerated against the current weights every
step. ``mix = 0`` skips the adversarial branch entirely, so a config
with mix 0 follows the plain-training trajectory bit for bit.

Determinism: every random draw (init, shuffling, dropout masks) is keyed
off (seed, purpose, epoch, step), so identical configs on a single
worker produce identical histories and final parameters.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import attacks, data as data_mod, nn, optim, ortho
from .exceptions import TrainingError, ValidationError

# entropy tags distinguishing the independent random streams
_INIT, _SHUFFLE, _STEP_CLEAN, _STEP_ADV = 0, 1, 2, 3


@dataclass
class AdvTraining:
    eps: float = 0.3
    mix_fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.mix_fraction <= 1.0:
            raise ValidationError(
                f"mix_fraction must lie in [0,1], got {self.mix_fraction}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValidationError(f"eps must lie in [0,1], got {self.eps}")


@dataclass
class TrainConfig:
    arch: str = "B"
    epochs: int = 5
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    reg: ortho.RegConfig = None
    adv: AdvTraining = None
    # lambda_base > 0 resolves per-layer lambdas from the freshly
    # initialized network's condition numbers when reg is not given.
    lambda_base: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValidationError(
                f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class ReportRow:
    dataset: str = ""
    arch: str = ""
    training_mode: str = ""
    attack: str = ""
    eps: float = 0.0
    alpha: float = None
    n: int = None
    accuracy: float = 0.0
    seed: int = None
    wall_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy out of [0,1]: {self.accuracy}")


@dataclass
class CondRow:
    dataset: str = ""
    arch: str = ""
    training_mode: str = ""
    max_kappa: float = 0.0
    per_layer: dict = field(default_factory=dict)


def _stream_seed(*entropy):
    return np.random.SeedSequence(entropy)


def _params_and_grads(net, grads, scale):
    """Flatten per-layer gradient dicts into optimizer order, scaled."""
    out = []
    for layer, g in zip(net.layers, grads.layers):
        if g is None:
            continue
        out.append(scale * g["weight"])
        out.append(scale * g["bias"])
    return out


def _zeros_like_params(net):
    out = []
    for layer in net.parameterized():
        out.append(np.zeros_like(layer.weight))
        out.append(np.zeros_like(layer.bias))
    return out


def _resolve_reg(cfg, net):
    if cfg.reg is not None:
        return cfg.reg
    if cfg.lambda_base > 0.0:
        return ortho.resolve_lambdas(net, cfg.lambda_base)
    return ortho.RegConfig(enabled=False)


def _split_data(data):
    if isinstance(data, tuple):
        train_ds, val_ds = data
    else:
        train_ds, val_ds = data, None
    if train_ds is None or len(train_ds) == 0:
        raise ValidationError("training data is empty")
    return train_ds, val_ds


def _fit(cfg, data):
    train_ds, val_ds = _split_data(data)
    net = nn.build_network(cfg.arch, seed=_stream_seed(cfg.seed, _INIT))
    reg = _resolve_reg(cfg, net)
    opt = optim.make_optimizer(cfg.optimizer, cfg.learning_rate)
    params = []
    for layer in net.parameterized():
        params.append(layer.weight)
        params.append(layer.bias)

    mix = cfg.adv.mix_fraction if cfg.adv is not None else 0.0
    layer_names = nn.param_layer_names(net)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        shuffle_rng = np.random.default_rng(
            _stream_seed(cfg.seed, _SHUFFLE, epoch))
        losses = []
        step = 0
        for x, y in data_mod.iter_batches(train_ds.images, train_ds.labels,
                                          cfg.batch_size, shuffle_rng):
            total_grads = _zeros_like_params(net)
            batch_loss = 0.0
            if mix < 1.0:
                loss, grads = nn.loss_and_grads(
                    net, x, y, mode="train",
                    seed=_stream_seed(cfg.seed, _STEP_CLEAN, epoch, step))
                batch_loss += (1.0 - mix) * loss
                for acc, g in zip(total_grads,
                                  _params_and_grads(net, grads, 1.0 - mix)):
                    acc += g
            if mix > 0.0:
                adv_x = attacks.fgsm(net, x, y, cfg.adv.eps)
                loss, grads = nn.loss_and_grads(
                    net, adv_x, y, mode="train",
                    seed=_stream_seed(cfg.seed, _STEP_ADV, epoch, step))
                batch_loss += mix * loss
                for acc, g in zip(total_grads,
                                  _params_and_grads(net, grads, mix)):
                    acc += g
            if reg.enabled:
                penalty_total, _ = ortho.total_loss(0.0, net, reg)
                batch_loss += penalty_total
                pgrads = ortho.penalty_grads(net, reg)
                k = 0
                for layer, pg in zip(net.layers, pgrads):
                    if not isinstance(layer, nn.PARAMETERIZED):
                        continue
                    if pg is not None:
                        total_grads[k] += pg
                    k += 2
            if not np.isfinite(batch_loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {step}")
            opt.step(params, total_grads)
            losses.append(batch_loss)
            step += 1

        reports, max_kappa = nn.layer_condition_numbers(net)
        if reg.enabled:
            _, penalties = ortho.total_loss(0.0, net, reg)
        else:
            penalties = {name: 0.0 for name in layer_names}
        history.append({
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "val_accuracy": (evaluate_clean(net, val_ds)
                             if val_ds is not None else None),
            "penalties": penalties,
            "kappas": {r.layer_name: r.kappa for r in reports},
            "max_kappa": max_kappa,
        })
    return net, history


def fit(net, train_ds, epochs, batch_size=64, learning_rate=1e-3,
        optimizer="adam", seed=0):
    """Bare cross-entropy fitting of an existing network, in place.

    No regularizer, no adversarial mixing, no history: this is the
    lightweight loop substitute training uses, where the network persists
    across calls but each call gets fresh optimizer state.
    """
    opt = optim.make_optimizer(optimizer, learning_rate)
    params = []
    for layer in net.parameterized():
        params.append(layer.weight)
        params.append(layer.bias)
    for epoch in range(1, epochs + 1):
        shuffle_rng = np.random.default_rng(
            _stream_seed(seed, _SHUFFLE, epoch))
        step = 0
        for x, y in data_mod.iter_batches(train_ds.images, train_ds.labels,
                                          batch_size, shuffle_rng):
            loss, grads = nn.loss_and_grads(
                net, x, y, mode="train",
                seed=_stream_seed(seed, _STEP_CLEAN, epoch, step))
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {step}")
            opt.step(params, _params_and_grads(net, grads, 1.0))
            step += 1
    return net


def train(cfg, data):
    """Plain training; reject configs carrying an adversarial recipe so
    the two entry points stay unambiguous."""
    if cfg.adv is not None:
        raise ValidationError("config has adv settings; use adversarial_train")
    return _fit(cfg, data)


def adversarial_train(cfg, data):
    if cfg.adv is None:
        raise ValidationError("adversarial_train needs cfg.adv")
    return _fit(cfg, data)


def evaluate_clean(net, dataset, batch_size=256):
    """Fraction of argmax-correct predictions, eval mode. Per-sample, so
    the batch size is a memory knob with no effect on the result."""
    hits = 0
    for x, y in data_mod.iter_batches(dataset.images, dataset.labels,
                                      batch_size):
        hits += int((nn.predict(net, x) == y).sum())
    return hits / len(dataset)


def evaluate_adversarial(net, attack_spec, eval_data, source_net=None,
                         batch_size=256, **meta):
    """Generate adversarial examples against ``source_net`` (defaults to
    ``net``: white-box) and measure ``net``'s accuracy on them.

    rand_fgsm noise is drawn per batch with seed (spec.seed, batch index),
    so results are deterministic for a fixed batch_size. Extra keyword
    arguments (dataset name, arch, training_mode, seed) pass through to
    the ReportRow.
    """
    if source_net is None:
        source_net = net
    started = time.perf_counter()
    hits = 0
    batch_index = 0
    for x, y in data_mod.iter_batches(eval_data.images, eval_data.labels,
                                      batch_size):
        if attack_spec.kind == "rand_fgsm":
            per_batch = attacks.AttackSpec(
                kind=attack_spec.kind, eps=attack_spec.eps,
                alpha=attack_spec.alpha, iters=attack_spec.iters,
                clip_to_domain=attack_spec.clip_to_domain,
                seed=int(np.random.SeedSequence(
                    (attack_spec.seed, batch_index)).generate_state(1)[0]))
        else:
            per_batch = attack_spec
        adv = attacks.run(source_net, x, y, per_batch)
        hits += int((nn.predict(net, adv) == y).sum())
        batch_index += 1
    alpha = attack_spec.alpha
    iters = attack_spec.iters
    if attack_spec.kind == "rand_fgsm":
        alpha = attack_spec.resolved_alpha()
    if attack_spec.kind == "bim":
        alpha = attack_spec.resolved_alpha()
        iters = attack_spec.resolved_iters()
    return ReportRow(
        attack=attack_spec.kind,
        eps=attack_spec.eps,
        alpha=alpha,
        n=iters,
        accuracy=hits / len(eval_data),
        wall_time=time.perf_counter() - started,
        **meta,
    )
