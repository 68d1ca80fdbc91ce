"""Sparse canonical correlation analysis with exact nonzero-count control.

Weight pairs for two data blocks are estimated one component at a time by
an alternating-regression scheme whose regression steps are followed by
top-k soft-thresholding, so the number of selected variables per side is
set directly instead of through a penalty search. Components are made
near-orthogonal by projection deflation; significance is assessed by
permutation testing with the nonzero counts held fixed.
"""

from .core import (
    RawMatrix,
    SparsityPair,
    StandardizedMatrix,
    WeightVector,
    soft_threshold_topk,
    standardize,
)
from .metrics import (
    CCAModel,
    SplitSpec,
    adjusted_cpev,
    canonical_correlation,
    cpev,
    cross_component_correlation,
    deflate,
    out_of_sample_components,
    out_of_sample_correlation,
)
from .permtest import PermutationReport, permutation_test
from .simulate import (
    GroundTruth,
    PlantedComponent,
    RecoveryScore,
    SimulationDesign,
    generate,
    score_recovery,
)
from .solver import (
    CanonicalComponent,
    SolverConfig,
    fit,
    fit_component,
    fit_component_grid,
    init_alpha,
)

__version__ = "0.1.0"

__all__ = [
    "RawMatrix",
    "StandardizedMatrix",
    "SparsityPair",
    "WeightVector",
    "standardize",
    "soft_threshold_topk",
    "SolverConfig",
    "CanonicalComponent",
    "init_alpha",
    "fit_component",
    "fit_component_grid",
    "fit",
    "CCAModel",
    "SplitSpec",
    "canonical_correlation",
    "deflate",
    "cpev",
    "adjusted_cpev",
    "cross_component_correlation",
    "out_of_sample_correlation",
    "out_of_sample_components",
    "PermutationReport",
    "permutation_test",
    "SimulationDesign",
    "PlantedComponent",
    "GroundTruth",
    "RecoveryScore",
    "generate",
    "score_recovery",
    "__version__",
]
