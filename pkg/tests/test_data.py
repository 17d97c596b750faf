import struct

import numpy as np
import pytest

from condlab import data, synth
from condlab.exceptions import DimensionError, FormatError, ValidationError


class TestIdxImages:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        imgs = rng.integers(0, 256, size=(5, 28, 28), dtype=np.uint8)
        p = tmp_path / "imgs.idx"
        data.write_idx_images(p, imgs)
        back = data.load_idx_images(p)
        assert back.dtype == np.uint8
        assert np.array_equal(back, imgs)

    def test_header_parse(self, tmp_path):
        payload = bytes(range(256)) * 6 + bytes(32)  # 1568 = 2*28*28
        p = tmp_path / "two.idx"
        p.write_bytes(struct.pack(">IIII", 0x00000803, 2, 28, 28) + payload)
        imgs = data.load_idx_images(p)
        assert imgs.shape == (2, 28, 28)
        assert imgs.ravel()[0] == 0 and imgs.ravel()[255] == 255

    def test_label_magic_in_image_file(self, tmp_path):
        p = tmp_path / "bad.idx"
        p.write_bytes(struct.pack(">IIII", 0x00000801, 1, 28, 28) + bytes(784))
        with pytest.raises(FormatError):
            data.load_idx_images(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "short.idx"
        p.write_bytes(struct.pack(">IIII", 0x00000803, 2, 28, 28) + bytes(784))
        with pytest.raises(FormatError, match="truncated"):
            data.load_idx_images(p)

    def test_writer_rejects_floats(self, tmp_path):
        with pytest.raises(ValidationError):
            data.write_idx_images(tmp_path / "f.idx", np.zeros((2, 28, 28)))


class TestIdxLabels:
    def test_direct_parse(self, tmp_path):
        p = tmp_path / "labels.idx"
        p.write_bytes(struct.pack(">II", 0x00000801, 3) + bytes([7, 2, 1]))
        assert data.load_idx_labels(p).tolist() == [7, 2, 1]

    def test_count_exceeds_payload(self, tmp_path):
        p = tmp_path / "short.idx"
        p.write_bytes(struct.pack(">II", 0x00000801, 5) + bytes([0, 1, 2, 3]))
        with pytest.raises(FormatError, match="truncated"):
            data.load_idx_labels(p)

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "bad.idx"
        p.write_bytes(struct.pack(">II", 0x00000803, 1) + bytes([0]))
        with pytest.raises(FormatError):
            data.load_idx_labels(p)

    def test_label_out_of_range(self, tmp_path):
        p = tmp_path / "oor.idx"
        p.write_bytes(struct.pack(">II", 0x00000801, 2) + bytes([3, 11]))
        with pytest.raises(ValidationError):
            data.load_idx_labels(p)

    def test_round_trip(self, tmp_path):
        labels = np.array([0, 9, 4, 4, 1])
        p = tmp_path / "rt.idx"
        data.write_idx_labels(p, labels)
        assert np.array_equal(data.load_idx_labels(p), labels)


class TestQuantize:
    def test_endpoints(self):
        imgs = np.zeros((1, 1, 2, 2))
        imgs[0, 0, 0, 0] = 1.0
        q = data.quantize(imgs)
        assert q[0, 0, 0] == 255 and q[0, 1, 1] == 0

    def test_inverts_normalization(self):
        raw = np.arange(256, dtype=np.uint8).reshape(1, 16, 16)
        back = data.quantize((raw / 255.0)[:, None])
        assert np.array_equal(back, raw)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            data.quantize(np.full((1, 1, 2, 2), 1.5))


class TestLabeledDataset:
    def test_pairing_mismatch(self):
        with pytest.raises(DimensionError):
            data.LabeledDataset(np.zeros((3, 1, 4, 4)), np.zeros(2, dtype=int),
                                data.Provenance("x", "train"))

    def test_pixel_range_enforced(self):
        with pytest.raises(ValidationError):
            data.LabeledDataset(np.full((1, 1, 4, 4), 2.0), np.zeros(1, dtype=int),
                                data.Provenance("x", "train"))

    def test_take(self):
        ds = data.LabeledDataset(np.zeros((4, 1, 2, 2)), np.arange(4) % 10,
                                 data.Provenance("x", "train"))
        sub = ds.take(2, split="eval")
        assert len(sub) == 2
        assert sub.source.split == "eval"
        with pytest.raises(ValidationError):
            ds.take(9)


def small_corpus():
    rng = np.random.default_rng(3)
    n = 600
    labels = np.arange(n) % 10
    rng.shuffle(labels)
    images = rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)
    test = rng.integers(0, 256, size=(100, 28, 28), dtype=np.uint8)
    test_labels = np.arange(100) % 10
    return images, labels, test, test_labels


class TestNormalizeAndSplit:
    def test_pixel_endpoints(self):
        imgs, labels, te, tey = small_corpus()
        imgs[0] = 255
        imgs[1] = 0
        train, val, test = data.normalize_and_split(imgs, labels, te, tey,
                                                    val_fraction=0.0)
        assert train.images.max() == 1.0
        assert train.images.min() == 0.0

    def test_split_sizes(self):
        imgs, labels, te, tey = small_corpus()
        train, val, test = data.normalize_and_split(imgs, labels, te, tey,
                                                    val_fraction=0.1)
        assert len(train) == 540 and len(val) == 60
        assert len(test) == 100
        assert train.source.split == "train" and val.source.split == "val"

    def test_deterministic_and_disjoint(self):
        imgs, labels, te, tey = small_corpus()
        a = data.normalize_and_split(imgs, labels, te, tey, subsample=200, seed=7)
        b = data.normalize_and_split(imgs, labels, te, tey, subsample=200, seed=7)
        assert np.array_equal(a[0].images, b[0].images)
        assert np.array_equal(a[1].labels, b[1].labels)
        # train and val pixel sets must not overlap: hash rows
        atr = {h.tobytes() for h in a[0].images}
        avl = {h.tobytes() for h in a[1].images}
        assert not atr & avl

    def test_subsample_stratified(self):
        imgs, labels, te, tey = small_corpus()
        train, val, _ = data.normalize_and_split(imgs, labels, te, tey,
                                                 subsample=100, seed=1,
                                                 val_fraction=0.1)
        counts = np.bincount(np.concatenate([train.labels, val.labels]),
                             minlength=10)
        assert counts.sum() == 100
        assert counts.min() >= 8 and counts.max() <= 12  # within 20% of 10

    def test_subsample_too_large(self):
        imgs, labels, te, tey = small_corpus()
        with pytest.raises(ValidationError):
            data.normalize_and_split(imgs, labels, te, tey, subsample=601)

    def test_bad_val_fraction(self):
        imgs, labels, te, tey = small_corpus()
        with pytest.raises(ValidationError):
            data.normalize_and_split(imgs, labels, te, tey, val_fraction=0.6)


class TestIterBatches:
    def test_covers_everything_once(self):
        x = np.arange(10)[:, None]
        y = np.arange(10)
        seen = []
        for bx, by in data.iter_batches(x, y, 3):
            assert np.array_equal(bx.ravel(), by)
            seen.extend(by.tolist())
        assert sorted(seen) == list(range(10))

    def test_shuffle_deterministic(self):
        x = np.arange(20)[:, None]
        y = np.arange(20)
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(5)
            runs.append([by.tolist() for _, by in data.iter_batches(x, y, 6, rng)])
        assert runs[0] == runs[1]
        assert runs[0][0] != list(range(6))  # actually shuffled

    def test_bad_batch_size(self):
        with pytest.raises(ValidationError):
            list(data.iter_batches(np.zeros((2, 1)), np.zeros(2), 0))


class TestSynthCorpus:
    def test_deterministic(self):
        a = synth.make_arrays(40, seed=9)
        b = synth.make_arrays(40, seed=9)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        c = synth.make_arrays(40, seed=10)
        assert not np.array_equal(a[0], c[0])

    def test_balanced(self):
        _, y = synth.make_arrays(120, seed=2)
        assert np.bincount(y, minlength=10).tolist() == [12] * 10

    def test_write_corpus_round_trip(self, tmp_path):
        paths = synth.write_corpus(tmp_path, n_train=50, n_test=20, seed=4)
        xs = data.load_idx_images(paths["train_images"])
        ys = data.load_idx_labels(paths["train_labels"])
        assert xs.shape == (50, 28, 28)
        assert ys.shape == (50,)
        want_x, want_y = synth.make_arrays(50, seed=4)
        assert np.array_equal(xs, want_x)
        assert np.array_equal(ys, want_y)
