from .grids import ImageGrid, quantize, write_image_grid, write_pgm, write_png
from .tables import format_value, make_provenance, write_csv, write_json

__all__ = [
    "ImageGrid",
    "quantize",
    "write_image_grid",
    "write_pgm",
    "write_png",
    "format_value",
    "make_provenance",
    "write_csv",
    "write_json",
]
