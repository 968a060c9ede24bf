from .boundary import (
    CornerCase,
    TraversalFrame,
    TraversalResult,
    find_corner_cases,
    find_shift_reference,
    solve_probability_crossing,
    traverse,
)
from .curves import AccuracyBin, AccuracyCurve, accuracy_vs_distance, style_distances
from .embedding import TSNEEmbedding, silhouette, standardize_columns, tsne_project
from .frechet import frechet_feature_distance, frechet_from_moments
from .population import (
    ProbePopulation,
    build_population,
    class_mean_style,
    reclassify,
    split_populations,
)
from .ranking import (
    DimensionScore,
    dimension_histograms,
    finite_difference_scores,
    ks_statistic,
    score_dimensions,
    scores_from_gradients,
    style_gradients,
    top_dims,
)

__all__ = [
    "CornerCase",
    "TraversalFrame",
    "TraversalResult",
    "find_corner_cases",
    "find_shift_reference",
    "solve_probability_crossing",
    "traverse",
    "AccuracyBin",
    "AccuracyCurve",
    "accuracy_vs_distance",
    "style_distances",
    "TSNEEmbedding",
    "silhouette",
    "standardize_columns",
    "tsne_project",
    "frechet_feature_distance",
    "frechet_from_moments",
    "ProbePopulation",
    "build_population",
    "class_mean_style",
    "reclassify",
    "split_populations",
    "DimensionScore",
    "dimension_histograms",
    "finite_difference_scores",
    "ks_statistic",
    "score_dimensions",
    "scores_from_gradients",
    "style_gradients",
    "top_dims",
]
