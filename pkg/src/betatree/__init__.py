"""Beta-tree histograms: k-d tree partitions with exact simultaneous
confidence bounds, goodness-of-fit pruning and mode hunting."""

from .beta_math import beta_cdf, beta_pdf, beta_quantile
from .errors import (
    BetaTreeError,
    Disconnected,
    EmptyResult,
    EmptySelection,
    InvalidAxis,
    InvalidShape,
    NoConvergence,
    NonFiniteValue,
    NotPositiveDefinite,
    ParseError,
    TiesDetected,
    TooFewPoints,
    UnboundedRect,
)
from .inference import (
    BetaTree,
    Bin,
    DepthPlan,
    extract_betatree,
    extract_betatree_iterative,
    fit,
    node_ci,
    plan_alphas,
    propagate_gof,
    tree_ci,
)
from .modes import build_adjacency, find_modes, shortest_path_report
from .partition import (
    BOUNDING_BOX,
    FULL_SPACE,
    Config,
    KdTree,
    Rect,
    bounding_box,
    build_kdtree,
    node_volume,
    validate_and_prepare,
)

__version__ = "0.1.0"
