"""Confidence demo along a network's least-sensitive input direction.

Perturbing an input along the right singular vector of the first layer's
smallest singular value changes that layer's output as little as the
layer allows (the change is scale times sigma_min). On an ill-conditioned
layer even a huge such perturbation leaves the network's confidence
nearly untouched; a well-conditioned layer reacts. The demo emits the
original and perturbed images as portable graymaps plus a JSON confidence
report covering both the unclipped and the domain-clipped variant.
"""

import json
import os

import numpy as np

from . import attacks, checkpoint, nn
from .exceptions import DimensionError, ValidationError


def write_pgm(path, image, lo=0.0, hi=1.0):
    """Write a 2-D array as a binary portable graymap.

    Values are mapped affinely from [lo, hi] to 0..255; pass lo=hi=None
    to auto-range (needed for unclipped perturbations, which leave the
    pixel domain and would otherwise saturate).
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"image must be 2-D, got shape {arr.shape}")
    if lo is None or hi is None:
        lo, hi = float(arr.min()), float(arr.max())
    span = hi - lo
    if span <= 0.0:
        span = 1.0
    scaled = np.clip(np.round((arr - lo) / span * 255.0), 0, 255)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + scaled.astype(np.uint8).tobytes())


def _confidence(net, flat_x, true_class):
    logits, _ = nn.forward(net, flat_x[None, :])
    probs = nn.softmax(logits)[0]
    return float(probs[true_class]), int(np.argmax(probs))


def fig3_demo(checkpoint_path, scale, clip, sample_index, test_set, out_dir,
              prefix="demo"):
    """Run the demo on one test sample. Returns (file paths, report).

    The sample must be correctly classified by the checkpointed model;
    otherwise a validation error asks for a different index. ``clip``
    picks which variant the report headlines; both variants are always
    computed and written.
    """
    net = checkpoint.load_checkpoint(checkpoint_path)
    if not 0 <= sample_index < len(test_set):
        raise ValidationError(
            f"sample_index {sample_index} out of range for "
            f"{len(test_set)} test samples")
    first = net.parameterized()[0]
    if first.kind != "dense":
        raise ValidationError(
            "demo needs a network whose first parameterized layer is "
            f"dense, got {first.kind}")

    image = test_set.images[sample_index, 0]
    true_class = int(test_set.labels[sample_index])
    x = image.reshape(-1)
    original_conf, predicted = _confidence(net, x, true_class)
    if predicted != true_class:
        raise ValidationError(
            f"sample {sample_index} is misclassified (true {true_class}, "
            f"predicted {predicted}); pick another index")

    # The stored dense weight maps row vectors (x @ W), so the matrix
    # acting on column input vectors is its transpose.
    w = first.weight.T
    side = image.shape[0]

    os.makedirs(out_dir, exist_ok=True)
    files = {"original": os.path.join(out_dir, f"{prefix}-original.pgm")}
    write_pgm(files["original"], image)

    report = {
        "sample_index": sample_index,
        "true_class": true_class,
        "scale": float(scale),
        "clip": bool(clip),
        "original_confidence": original_conf,
    }
    for name, do_clip in (("unclipped", False), ("clipped", True)):
        result = attacks.min_singular_perturb(w, x, scale, clip=do_clip)
        conf, pred = _confidence(net, result.x_prime, true_class)
        path = os.path.join(out_dir, f"{prefix}-{name}.pgm")
        perturbed = result.x_prime.reshape(side, side)
        if do_clip:
            write_pgm(path, perturbed)
        else:
            write_pgm(path, perturbed, lo=None, hi=None)
        files[name] = path
        report[name] = {
            "confidence": conf,
            "predicted_class": pred,
            "sigma_min": result.sigma,
            "degenerate_direction": result.degenerate,
            "image": path,
        }
    headline = "clipped" if clip else "unclipped"
    report["confidence_after"] = report[headline]["confidence"]

    report_path = os.path.join(out_dir, f"{prefix}-report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    files["report"] = report_path
    return files, report
