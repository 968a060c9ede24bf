from .analytic import AnalyticGenerator
from .classifier import (
    ConvNetClassifier,
    classifier_features,
    classifier_logits,
    classifier_probs,
)
from .generator import (
    D_S,
    D_W,
    D_Z,
    STYLE_LAYOUT,
    StyleGenerator,
    mapping_forward,
    style_affine,
    synthesize,
)

__all__ = [
    "AnalyticGenerator",
    "ConvNetClassifier",
    "classifier_features",
    "classifier_logits",
    "classifier_probs",
    "D_S",
    "D_W",
    "D_Z",
    "STYLE_LAYOUT",
    "StyleGenerator",
    "mapping_forward",
    "style_affine",
    "synthesize",
]
