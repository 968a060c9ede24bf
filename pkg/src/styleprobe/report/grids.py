"""Image-grid assembly and PGM/PNG output.

Annotations (dimension index, direction arrow, progress, classifier output)
live in a companion JSON next to the image rather than burned into pixels,
keeping the image path dependency-free.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import IoFailure, ShapeMismatch

SEPARATOR_GRAY = 0.5


@dataclass
class ImageGrid:
    """Row-major grid of equally sized grayscale cells with annotations.

    ``annotations`` holds one dict per cell (row-major), each carrying at
    least the classifier output used to produce the cell.
    """

    rows: int
    cols: int
    cells: list = field(default_factory=list)
    annotations: list = field(default_factory=list)
    row_labels: list = field(default_factory=list)
    col_labels: list = field(default_factory=list)
    separator: int = 2

    def add_cell(self, image, **annotation):
        self.cells.append(np.asarray(image, dtype=np.float64))
        self.annotations.append(annotation)

    def to_array(self, pad_value=SEPARATOR_GRAY):
        if len(self.cells) != self.rows * self.cols:
            raise ShapeMismatch(
                f"{len(self.cells)} cells for a {self.rows}x{self.cols} grid")
        h, w = self.cells[0].shape
        for cell in self.cells:
            if cell.shape != (h, w):
                raise ShapeMismatch("grid cells must share extents")
        sep = self.separator
        total_h = self.rows * h + (self.rows - 1) * sep
        total_w = self.cols * w + (self.cols - 1) * sep
        canvas = np.full((total_h, total_w), pad_value)
        for i, cell in enumerate(self.cells):
            r, c = divmod(i, self.cols)
            y, x = r * (h + sep), c * (w + sep)
            canvas[y:y + h, x:x + w] = cell
        return canvas


def quantize(image):
    """Map [0, 1] floats to bytes, rounding half up."""
    return np.clip(np.floor(np.asarray(image) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def write_pgm(image, path):
    data = quantize(image)
    h, w = data.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(data.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def _png_chunk(tag, payload):
    return (struct.pack(">I", len(payload)) + tag + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))


def write_png(image, path):
    """Minimal 8-bit grayscale PNG encoder (filter 0 scanlines)."""
    data = quantize(image)
    h, w = data.shape
    raw = b"".join(b"\x00" + data[r].tobytes() for r in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    try:
        with open(path, "wb") as fh:
            fh.write(b"\x89PNG\r\n\x1a\n")
            fh.write(_png_chunk(b"IHDR", ihdr))
            fh.write(_png_chunk(b"IDAT", zlib.compress(raw, 9)))
            fh.write(_png_chunk(b"IEND", b""))
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def write_image_grid(grid, path):
    """Write the assembled grid (format chosen by extension: .pgm or .png)
    plus a companion ``<path>.json`` carrying labels and annotations."""
    canvas = grid.to_array()
    path = str(path)
    if path.endswith(".png"):
        write_png(canvas, path)
    else:
        write_pgm(canvas, path)
    sidecar = {
        "rows": grid.rows,
        "cols": grid.cols,
        "separator": grid.separator,
        "row_labels": list(grid.row_labels),
        "col_labels": list(grid.col_labels),
        "annotations": grid.annotations,
    }
    try:
        with open(path + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}.json: {e}") from e
    return path
