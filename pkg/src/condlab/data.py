"""IDX container ingestion, [0,1] normalization, splitting, batching.

The IDX layout is the classic big-endian one: images carry magic
0x00000803 then u32 count/rows/cols and a u8 payload; labels carry magic
0x00000801 then u32 count and one u8 per item. The same writer that
round-trips datasets also exports adversarial batches, so both
directions are exercised in the tests.

Pixels are mapped u8/255 into [0,1] and nothing else: attacks assume the
unit-box input domain, so no mean/std standardization is applied.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, FormatError, ValidationError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
NUM_CLASSES = 10


def _read_exact(fh, count, what):
    data = fh.read(count)
    if len(data) != count:
        raise FormatError(
            f"truncated {what}: wanted {count} bytes, got {len(data)}")
    return data


def load_idx_images(path):
    """Parse an IDX image file into a u8 array of shape (n, rows, cols)."""
    with open(path, "rb") as fh:
        magic, = struct.unpack(">I", _read_exact(fh, 4, "image magic"))
        if magic != IMAGE_MAGIC:
            raise FormatError(
                f"{path}: bad image magic 0x{magic:08x}, want 0x{IMAGE_MAGIC:08x}")
        count, rows, cols = struct.unpack(">III", _read_exact(fh, 12, "image header"))
        payload = _read_exact(fh, count * rows * cols, "image payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols).copy()


def load_idx_labels(path):
    """Parse an IDX label file into an int64 vector with values in [0, 9]."""
    with open(path, "rb") as fh:
        magic, = struct.unpack(">I", _read_exact(fh, 4, "label magic"))
        if magic != LABEL_MAGIC:
            raise FormatError(
                f"{path}: bad label magic 0x{magic:08x}, want 0x{LABEL_MAGIC:08x}")
        count, = struct.unpack(">I", _read_exact(fh, 4, "label header"))
        payload = _read_exact(fh, count, "label payload")
    labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    if labels.size and labels.max() >= NUM_CLASSES:
        raise ValidationError(
            f"{path}: label {labels.max()} out of range [0, {NUM_CLASSES})")
    return labels


def write_idx_images(path, images):
    images = np.asarray(images)
    if images.dtype != np.uint8 or images.ndim != 3:
        raise ValidationError(
            f"IDX images must be u8 of shape (n, rows, cols), got "
            f"{images.dtype} {images.shape}")
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes(order="C"))


def write_idx_labels(path, labels):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValidationError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= NUM_CLASSES):
        raise ValidationError(
            f"labels out of range [0, {NUM_CLASSES}): "
            f"[{labels.min()}, {labels.max()}]")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, labels.size))
        fh.write(labels.astype(np.uint8).tobytes(order="C"))


def quantize(images01):
    """Inverse of the /255 normalization, back onto the u8 grid."""
    images01 = np.asarray(images01, dtype=np.float64)
    if images01.min() < 0.0 or images01.max() > 1.0:
        raise ValidationError("images must lie in [0,1] before quantization")
    flat = images01.reshape(images01.shape[0], *images01.shape[-2:])
    return np.round(flat * 255.0).astype(np.uint8)


@dataclass
class Provenance:
    path: str
    split: str
    subsample_seed: object = None


@dataclass
class LabeledDataset:
    """Images (n, 1, h, w) in [0,1] paired with labels in [0, 10)."""

    images: np.ndarray
    labels: np.ndarray
    source: Provenance

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4 or self.images.shape[1] != 1:
            raise DimensionError(
                f"images must be (n, 1, h, w), got {self.images.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.images.shape[0]:
            raise DimensionError(
                f"{self.labels.shape} labels paired with "
                f"{self.images.shape[0]} images")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValidationError("pixels must lie in [0,1]")
        if self.labels.size and (self.labels.min() < 0
                                 or self.labels.max() >= NUM_CLASSES):
            raise ValidationError(f"labels must lie in [0, {NUM_CLASSES})")

    def __len__(self):
        return self.images.shape[0]

    def take(self, count, split=None):
        """First ``count`` samples as a new dataset (order-preserving)."""
        if count > len(self):
            raise ValidationError(f"asked for {count} of {len(self)} samples")
        src = Provenance(self.source.path, split or self.source.split,
                         self.source.subsample_seed)
        return LabeledDataset(self.images[:count], self.labels[:count], src)


def _stratified_indices(labels, count, rng):
    """Draw ``count`` indices with per-class quotas as close to uniform as
    the source allows; any shortfall is refilled from the remaining pool."""
    quota, extra = divmod(count, NUM_CLASSES)
    order = rng.permutation(NUM_CLASSES)
    picked = []
    leftovers = []
    for rank, cls in enumerate(order):
        want = quota + (1 if rank < extra else 0)
        pool = rng.permutation(np.flatnonzero(labels == cls))
        picked.append(pool[:want])
        leftovers.append(pool[want:])
    picked = np.concatenate(picked) if picked else np.empty(0, dtype=np.int64)
    short = count - picked.size
    if short > 0:
        spare = np.concatenate([l for l in leftovers if l.size])
        picked = np.concatenate([picked, rng.permutation(spare)[:short]])
    return rng.permutation(picked)


def normalize_and_split(train_images, train_labels, test_images, test_labels,
                        val_fraction=0.1, subsample=None, seed=0, path=""):
    """u8 arrays in, three LabeledDatasets out: (train, val, test).

    ``subsample`` (optional) first draws that many training samples,
    stratified so class counts stay near-uniform; ``val_fraction`` of what
    remains is then carved off as validation, also stratified. Both draws
    are deterministic in ``seed``. The test pair passes through whole.
    """
    if not 0.0 <= val_fraction <= 0.5:
        raise ValidationError(
            f"val_fraction must lie in [0, 0.5], got {val_fraction}")
    train_images = np.asarray(train_images)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if train_images.shape[0] != train_labels.shape[0]:
        raise DimensionError(
            f"{train_labels.shape[0]} labels paired with "
            f"{train_images.shape[0]} train images")
    if subsample is not None and subsample > train_images.shape[0]:
        raise ValidationError(
            f"subsample {subsample} exceeds {train_images.shape[0]} samples")

    rng = np.random.default_rng(seed)
    if subsample is not None:
        keep = _stratified_indices(train_labels, subsample, rng)
        train_images, train_labels = train_images[keep], train_labels[keep]

    n = train_images.shape[0]
    val_count = int(round(val_fraction * n))
    val_idx = _stratified_indices(train_labels, val_count, rng)
    mask = np.ones(n, dtype=bool)
    mask[val_idx] = False
    train_idx = np.flatnonzero(mask)

    def norm(raw):
        arr = np.asarray(raw, dtype=np.float64) / 255.0
        return arr[:, None, :, :]

    sub_seed = seed if subsample is not None else None
    train = LabeledDataset(norm(train_images[train_idx]), train_labels[train_idx],
                           Provenance(path, "train", sub_seed))
    val = LabeledDataset(norm(train_images[val_idx]), train_labels[val_idx],
                         Provenance(path, "val", sub_seed))
    test = LabeledDataset(norm(np.asarray(test_images)),
                          np.asarray(test_labels, dtype=np.int64),
                          Provenance(path, "test", None))
    return train, val, test


def iter_batches(images, labels, batch_size, rng=None):
    """Yield (x, y) minibatches; pass an rng to shuffle, omit it for
    sequential order. The last batch may be short."""
    if batch_size <= 0:
        raise ValidationError(f"batch_size must be positive, got {batch_size}")
    n = images.shape[0]
    idx = np.arange(n)
    if rng is not None:
        rng.shuffle(idx)
    for start in range(0, n, batch_size):
        sel = idx[start:start + batch_size]
        yield images[sel], labels[sel]
