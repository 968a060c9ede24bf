"""styleprobe: characterize image-classifier failure conditions by probing
the style space of a differentiable generative model.

The pieces compose as a pipeline: build a half-clean/half-corrupted digit
corpus, train a small CNN classifier and a style-modulated generator on it,
then rank the generator's style dimensions by how strongly they degrade the
classifier, traverse the influential ones, locate decision-boundary corner
cases, and measure accuracy as a function of distance in style space.
"""

from .autodiff import Tape, Tensor, finite_diff_check

__version__ = "0.1.0"

__all__ = ["Tape", "Tensor", "finite_diff_check", "__version__"]
