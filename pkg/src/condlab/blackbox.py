"""Label-only substitute training and transfer attacks.

The attacker here never sees the target network's weights or gradients,
only hard labels returned by an oracle callable. A small local substitute
network is trained to mimic those labels, the training set is grown by
pushing points across the substitute's own decision boundary (Jacobian
augmentation), and white-box attacks crafted on the substitute are then
transferred to the oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from . import attacks, nn, train
from .data import LabeledDataset, Provenance
from .exceptions import ValidationError

DEFAULT_LAMBDA_AUG = 0.1
SUBSTITUTE_ARCH = "C"
EPOCHS_PER_ROUND = 10


class CountingOracle:
    """Hard-label view of a target that counts every queried sample.

    Wraps either a network (answered via its own forward pass) or an
    arbitrary callable mapping an image batch to integer labels.
    """

    def __init__(self, target):
        self.target = target
        self.query_count = 0

    def __call__(self, x):
        x = nn.as_input(x)
        self.query_count += x.shape[0]
        if isinstance(self.target, nn.Network):
            return nn.predict(self.target, x)
        labels = np.asarray(self.target(x))
        if labels.shape != (x.shape[0],):
            raise ValidationError(
                f"oracle returned shape {labels.shape} for batch of "
                f"{x.shape[0]}")
        return labels.astype(np.int64)


def net_oracle(net):
    """Wrap a trained network as a counting hard-label oracle."""
    return CountingOracle(net)


@dataclass
class SubstituteState:
    """Everything the attacker holds at the end of a round."""

    substitute: nn.Network
    query_count: int = 0
    round: int = 0
    training_set: LabeledDataset = None
    agreements: list = field(default_factory=list)


def batched_predict(net, images, batch_size=256):
    out = []
    for start in range(0, images.shape[0], batch_size):
        out.append(nn.predict(net, images[start:start + batch_size]))
    return np.concatenate(out)


def batched_oracle(oracle, images, batch_size=256):
    out = []
    for start in range(0, images.shape[0], batch_size):
        out.append(oracle(images[start:start + batch_size]))
    return np.concatenate(out)


def jacobian_augment(substitute, current, lam_aug, oracle, batch_size=256):
    """Double a substitute training set along the substitute's own label
    gradients.

    For each existing point x with oracle label y, a new point
    x' = clamp(x + lam_aug * sign(d logit_y / dx), 0, 1) is created and
    sent to the oracle for labelling. The gradient is of the substitute's
    logit for the label the oracle assigned, so new points probe where the
    substitute is most willing to change its answer.
    """
    if lam_aug <= 0.0:
        raise ValidationError(f"lam_aug must be positive, got {lam_aug}")
    images = current.images
    labels = current.labels
    pieces = []
    for start in range(0, images.shape[0], batch_size):
        x = images[start:start + batch_size]
        y = labels[start:start + batch_size]
        g = nn.logit_input_gradient(substitute, x, y)
        pieces.append(np.clip(x + lam_aug * np.sign(g), 0.0, 1.0))
    new_images = np.concatenate(pieces)
    new_labels = batched_oracle(oracle, new_images, batch_size)
    source = Provenance(path=current.source.path, split="substitute",
                        subsample_seed=current.source.subsample_seed)
    return LabeledDataset(np.concatenate([images, new_images]),
                          np.concatenate([labels, new_labels]), source)


def _round_seed(seed, round_index):
    entropy = np.random.SeedSequence((seed, 4, round_index))
    return int(entropy.generate_state(1)[0])


def black_box_attack(oracle, seeds, rounds, eps, attack=None, eval_set=None,
                     lam_aug=DEFAULT_LAMBDA_AUG, seed=0,
                     epochs_per_round=EPOCHS_PER_ROUND, batch_size=64,
                     learning_rate=1e-3):
    """Run the full substitute pipeline and transfer an attack.

    oracle      hard-label callable (wrapped in a CountingOracle if it
                does not already count queries)
    seeds       LabeledDataset of initial attacker-held samples; its
                labels are ignored, the oracle is asked instead
    rounds      number of Jacobian augmentations; the substitute is
                (re)fitted rounds + 1 times and the final training set
                holds len(seeds) * 2**rounds points
    eps         perturbation budget for the transferred attack
    attack      optional attacks.AttackSpec; defaults to FGSM at eps
    eval_set    LabeledDataset with ground-truth labels used to measure
                substitute agreement and transfer accuracy; defaults to
                the seed set

    Returns (adversarial LabeledDataset, SubstituteState, transfer_accuracy)
    where transfer_accuracy is the oracle's accuracy against ground truth
    on the transferred adversarial examples.
    """
    if rounds < 1:
        raise ValidationError(f"rounds must be >= 1, got {rounds}")
    if len(seeds) == 0:
        raise ValidationError("seed set is empty")
    if not isinstance(oracle, CountingOracle):
        oracle = CountingOracle(oracle)
    if attack is None:
        attack = attacks.AttackSpec(kind="fgsm", eps=eps)
    elif attack.eps != eps:
        raise ValidationError(
            f"attack.eps {attack.eps} disagrees with eps {eps}")
    if eval_set is None:
        eval_set = seeds

    initial_labels = batched_oracle(oracle, seeds.images)
    training_set = LabeledDataset(
        seeds.images.copy(), initial_labels,
        Provenance(path=seeds.source.path, split="substitute",
                   subsample_seed=seeds.source.subsample_seed))

    substitute = nn.build_network(
        SUBSTITUTE_ARCH, seed=np.random.SeedSequence((seed, 0)))
    # Target answers are deterministic, so agreement probes query the
    # oracle once and reuse the labels every round.
    eval_oracle_labels = batched_oracle(oracle, eval_set.images)

    agreements = []
    for round_index in range(rounds + 1):
        train.fit(substitute, training_set, epochs=epochs_per_round,
                  batch_size=batch_size, learning_rate=learning_rate,
                  seed=_round_seed(seed, round_index))
        sub_labels = batched_predict(substitute, eval_set.images)
        agreements.append(float(np.mean(sub_labels == eval_oracle_labels)))
        if round_index < rounds:
            training_set = jacobian_augment(substitute, training_set,
                                            lam_aug, oracle)

    adv_images = np.empty_like(eval_set.images)
    for start in range(0, eval_set.images.shape[0], 256):
        x = eval_set.images[start:start + 256]
        y = eval_oracle_labels[start:start + 256]
        adv_images[start:start + x.shape[0]] = attacks.run(
            substitute, x, y, attack)
    adv_set = LabeledDataset(
        adv_images, eval_set.labels.copy(),
        Provenance(path=eval_set.source.path, split="adversarial",
                   subsample_seed=eval_set.source.subsample_seed))

    adv_oracle_labels = batched_oracle(oracle, adv_images)
    transfer_accuracy = float(np.mean(adv_oracle_labels == eval_set.labels))

    state = SubstituteState(substitute=substitute,
                            query_count=oracle.query_count,
                            round=rounds, training_set=training_set,
                            agreements=agreements)
    return adv_set, state, transfer_accuracy
