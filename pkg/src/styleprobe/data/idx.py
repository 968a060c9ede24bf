"""Reader for IDX-format image/label files (big-endian magic + dims)."""

from __future__ import annotations

import struct

import numpy as np

from ..exceptions import BadMagic, CountMismatch, TruncatedFile
from .dataset import LabeledImage

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_exact(fh, n, what, path):
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFile(f"{path}: file ended while reading {what}")
    return buf


def _read_header(fh, path, expected_magic, n_dims):
    (magic,) = struct.unpack(">I", _read_exact(fh, 4, "magic", path))
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    return struct.unpack(f">{n_dims}I", _read_exact(fh, 4 * n_dims, "dimensions", path))


def load_idx(images_path, labels_path):
    """Load paired IDX image/label files into LabeledImage records.

    Pixel bytes are scaled from [0, 255] to [0.0, 1.0].
    """
    with open(images_path, "rb") as fh:
        count, rows, cols = _read_header(fh, images_path, IMAGE_MAGIC, 3)
        raw = _read_exact(fh, count * rows * cols, "pixel data", images_path)
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)
    with open(labels_path, "rb") as fh:
        (label_count,) = _read_header(fh, labels_path, LABEL_MAGIC, 1)
        labels = np.frombuffer(
            _read_exact(fh, label_count, "label data", labels_path), dtype=np.uint8
        )
    if count != label_count:
        raise CountMismatch(f"{count} images vs {label_count} labels")
    scaled = images.astype(np.float32) / 255.0
    return [
        LabeledImage(image=scaled[i], label=int(labels[i]), corrupted=False)
        for i in range(count)
    ]
