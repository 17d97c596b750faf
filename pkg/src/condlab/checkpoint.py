"""Bit-exact network checkpoints.

Layout: magic "NNC1"; little-endian u32 count of parameterized layers;
then per layer a u8 kind tag followed by two arrays (weights, then
bias), each encoded as u8 rank, rank little-endian u32 dims, and the
row-major float64 payload. Parameter-free layers (relu, pool, dropout,
flatten) carry no state and are not stored; the surrounding structure is
recovered from the architecture.

Loading parses the whole file before touching any Network, so a
truncated or corrupt file never yields a partially filled model. Saving
writes to a temp file and renames, so a crash cannot leave a half
checkpoint at the target path.
"""

import os
import struct
import tempfile

import numpy as np

from . import nn
from .exceptions import FormatError, ValidationError

MAGIC = b"NNC1"
KIND_TAGS = {"dense": 1, "conv2d": 2}
TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}

# (kind, weight shape) sequences that identify the stock architectures,
# so a checkpoint of A/B/C can be loaded without naming the arch.
_ARCH_SIGNATURES = {
    "A": (("conv2d", (5, 5, 1, 32)), ("conv2d", (5, 5, 32, 64)),
          ("dense", (3136, 1024)), ("dense", (1024, 10))),
    "B": (("dense", (784, 256)), ("dense", (256, 256)), ("dense", (256, 10))),
    "C": (("dense", (784, 200)), ("dense", (200, 200)), ("dense", (200, 10))),
}


def _encode_array(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    parts = [struct.pack("<B", arr.ndim)]
    parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


def save_checkpoint(net, path):
    parts = [MAGIC, struct.pack("<I", len(net.parameterized()))]
    for layer in net.parameterized():
        if layer.kind not in KIND_TAGS:
            raise ValidationError(f"cannot checkpoint layer kind {layer.kind!r}")
        parts.append(struct.pack("<B", KIND_TAGS[layer.kind]))
        parts.append(_encode_array(layer.weight))
        parts.append(_encode_array(layer.bias))
    blob = b"".join(parts)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)),
                               prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Cursor:
    def __init__(self, blob):
        self.blob = blob
        self.pos = 0

    def take(self, count, what):
        if self.pos + count > len(self.blob):
            raise FormatError(
                f"truncated checkpoint: wanted {count} bytes for {what}, "
                f"{len(self.blob) - self.pos} left")
        out = self.blob[self.pos:self.pos + count]
        self.pos += count
        return out


def _decode_array(cur):
    rank, = struct.unpack("<B", cur.take(1, "array rank"))
    dims = struct.unpack(f"<{rank}I", cur.take(4 * rank, "array dims"))
    count = 1
    for d in dims:
        count *= d
    payload = cur.take(8 * count, "array payload")
    return np.frombuffer(payload, dtype="<f8").reshape(dims).copy()


def read_entries(path):
    """Parse a checkpoint into (kind, weight, bias) tuples, validating the
    container; no Network is built."""
    with open(path, "rb") as fh:
        blob = fh.read()
    cur = _Cursor(blob)
    if cur.take(4, "magic") != MAGIC:
        raise FormatError(f"{path}: bad checkpoint magic")
    count, = struct.unpack("<I", cur.take(4, "layer count"))
    entries = []
    for i in range(count):
        tag, = struct.unpack("<B", cur.take(1, f"layer {i} kind"))
        if tag not in TAG_KINDS:
            raise FormatError(f"{path}: unknown layer kind tag {tag}")
        weight = _decode_array(cur)
        bias = _decode_array(cur)
        entries.append((TAG_KINDS[tag], weight, bias))
    if cur.pos != len(blob):
        raise FormatError(
            f"{path}: {len(blob) - cur.pos} trailing bytes after last layer")
    return entries


def _signature(entries):
    return tuple((kind, weight.shape) for kind, weight, _ in entries)


def load_checkpoint(path, net=None, arch=None):
    """Rebuild a Network from a checkpoint.

    The stock architectures are recognized by their layer signature; for
    anything else pass ``arch`` or a structurally matching ``net`` to load
    into. Shape mismatches (e.g. a B checkpoint forced into A) raise
    FormatError before any parameter is assigned.
    """
    entries = read_entries(path)
    if net is None:
        if arch is None:
            sig = _signature(entries)
            matches = [a for a, s in _ARCH_SIGNATURES.items() if s == sig]
            if not matches:
                raise FormatError(
                    f"{path}: layer signature matches no stock architecture; "
                    "pass arch= or net=")
            arch = matches[0]
        net = nn.build_network(arch, seed=0)
    target = net.parameterized()
    if len(target) != len(entries):
        raise FormatError(
            f"{path}: {len(entries)} stored layers, network has {len(target)}")
    staged = []
    for layer, (kind, weight, bias) in zip(target, entries):
        if layer.kind != kind:
            raise FormatError(
                f"{path}: stored {kind} where network has {layer.kind}")
        if weight.shape != layer.weight.shape or bias.shape != layer.bias.shape:
            raise FormatError(
                f"{path}: stored shapes {weight.shape}/{bias.shape} do not "
                f"match {layer.weight.shape}/{layer.bias.shape}")
        staged.append((layer, weight, bias))
    for layer, weight, bias in staged:
        layer.weight = weight
        layer.bias = bias
    return net
