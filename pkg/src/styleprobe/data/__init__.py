from .corruption import (
    GaussianBlurTransformer,
    GaussianNoiseTransformer,
    SeverityConfig,
    corrupt_dataset,
    gaussian_blur,
    gaussian_noise,
)
from .dataset import LabeledImage, load_dataset_cache, save_dataset_cache, stack_images
from .glyphs import glyph_dataset, render_glyph
from .idx import load_idx

__all__ = [
    "GaussianBlurTransformer",
    "GaussianNoiseTransformer",
    "SeverityConfig",
    "corrupt_dataset",
    "gaussian_blur",
    "gaussian_noise",
    "LabeledImage",
    "load_dataset_cache",
    "save_dataset_cache",
    "stack_images",
    "glyph_dataset",
    "render_glyph",
    "load_idx",
]
