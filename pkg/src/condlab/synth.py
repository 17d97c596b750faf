"""Deterministic synthetic digit corpus in the IDX container.

Digits are rendered from seven-segment skeletons with per-sample affine
jitter (rotation, scale, shift), per-segment endpoint wobble, stroke
width variation and additive pixel noise, then quantized to u8 on a
28x28 grid. Several digit pairs differ by a single segment (5/6, 8/9,
3/9), so the classes are genuinely confusable and the problem does not
collapse to template matching.

Everything is a pure function of (count, seed), so regenerating a split
yields byte-identical IDX files.
"""

import os

import numpy as np

from . import data
from .exceptions import ValidationError

SIZE = 28

# Segment endpoints in a unit box, y pointing down.
_SEGS = {
    "A": ((0.20, 0.16), (0.80, 0.16)),
    "B": ((0.80, 0.16), (0.80, 0.50)),
    "C": ((0.80, 0.50), (0.80, 0.84)),
    "D": ((0.20, 0.84), (0.80, 0.84)),
    "E": ((0.20, 0.50), (0.20, 0.84)),
    "F": ((0.20, 0.16), (0.20, 0.50)),
    "G": ((0.20, 0.50), (0.80, 0.50)),
}

_DIGIT_SEGS = {
    0: "ABCDEF",
    1: "BC",
    2: "ABGED",
    3: "ABGCD",
    4: "FGBC",
    5: "AFGCD",
    6: "AFGECD",
    7: "ABC",
    8: "ABCDEFG",
    9: "ABCDFG",
}

_POINTS_PER_SEG = 24

_YY, _XX = np.mgrid[0:SIZE, 0:SIZE]
_GRID = np.stack([_XX.ravel(), _YY.ravel()], axis=1).astype(np.float64)


def _render(digit, rng):
    angle = rng.uniform(-0.20, 0.20)
    scale = rng.uniform(0.72, 1.00) * SIZE
    shift = rng.uniform(-2.0, 2.0, size=2) + (SIZE - 1) / 2.0
    width = rng.uniform(0.65, 1.15)
    ca, sa = np.cos(angle), np.sin(angle)

    pts = []
    for seg in _DIGIT_SEGS[digit]:
        (x0, y0), (x1, y1) = _SEGS[seg]
        wob = rng.normal(0.0, 0.018, size=4)
        p0 = np.array([x0 + wob[0] - 0.5, y0 + wob[1] - 0.5])
        p1 = np.array([x1 + wob[2] - 0.5, y1 + wob[3] - 0.5])
        t = np.linspace(0.0, 1.0, _POINTS_PER_SEG)[:, None]
        pts.append(p0 + t * (p1 - p0))
    pts = np.concatenate(pts) * scale
    pts = pts @ np.array([[ca, -sa], [sa, ca]]).T + shift

    # distance from every pixel to the nearest stroke point
    d2 = ((_GRID[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    img = np.exp(-d2 / (2.0 * width * width)).reshape(SIZE, SIZE)
    img = np.clip(img * rng.uniform(220.0, 255.0)
                  + rng.normal(0.0, 10.0, size=(SIZE, SIZE)), 0.0, 255.0)
    return img.astype(np.uint8)


def make_arrays(count, seed):
    """``count`` jittered digits, class-balanced, deterministic in seed.

    Returns (images u8 (count, 28, 28), labels int64 (count,)).
    """
    if count <= 0:
        raise ValidationError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    labels = np.arange(count) % 10
    rng.shuffle(labels)
    images = np.empty((count, SIZE, SIZE), dtype=np.uint8)
    for i in range(count):
        images[i] = _render(int(labels[i]), rng)
    return images, labels.astype(np.int64)


def write_corpus(out_dir, n_train, n_test, seed=0):
    """Write four standard-named IDX files and return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "train_images": os.path.join(out_dir, "train-images-idx3-ubyte"),
        "train_labels": os.path.join(out_dir, "train-labels-idx1-ubyte"),
        "test_images": os.path.join(out_dir, "t10k-images-idx3-ubyte"),
        "test_labels": os.path.join(out_dir, "t10k-labels-idx1-ubyte"),
    }
    tr_x, tr_y = make_arrays(n_train, seed)
    te_x, te_y = make_arrays(n_test, seed + 1_000_003)
    data.write_idx_images(paths["train_images"], tr_x)
    data.write_idx_labels(paths["train_labels"], tr_y)
    data.write_idx_images(paths["test_images"], te_x)
    data.write_idx_labels(paths["test_labels"], te_y)
    return paths
