"""Latent factor discovery by total correlation explanation.

Learns discrete latent factors that explain as much of a dataset's
multivariate correlation as possible, stacks them into a hierarchy, and
ships a ground-truth latent-tree benchmark plus scoring utilities.
"""

__version__ = "0.1.0"

from .data import (
    MISSING,
    DataError,
    DataMatrix,
    column_entropies,
    discretize_counts,
    load_table,
)
from .info import (
    JointTable,
    conditional_total_correlation,
    entropy,
    joint_from_codes,
    mutual_information,
    tc_explained,
    total_correlation,
)
from .core import (
    CorexConfig,
    CorexLayer,
    Marginals,
    SoftLabels,
    compute_labels,
    estimate_marginals,
    factor_tc,
    fit_best,
    fit_layer,
    hard_labels,
    init_state,
    transform,
    update_alpha,
)
from .hierarchy import (
    ClusterAssignment,
    Hierarchy,
    clusters,
    fit_hierarchy,
    live_factors,
    prune_variables,
    rank_factors,
    transform_hierarchy,
    tree_to_dict,
    tree_to_dot,
)
from .synthetic import ERASURE, GroundTruth, LatentTreeSpec, bec, bsc, generate
from .evaluation import (
    EXCLUDED,
    adjusted_rand_index,
    binary_factor_accuracy,
    confusion_matrix,
)

__all__ = [
    "MISSING",
    "DataError",
    "DataMatrix",
    "column_entropies",
    "discretize_counts",
    "load_table",
    "JointTable",
    "entropy",
    "mutual_information",
    "total_correlation",
    "conditional_total_correlation",
    "tc_explained",
    "joint_from_codes",
    "CorexConfig",
    "CorexLayer",
    "Marginals",
    "SoftLabels",
    "init_state",
    "estimate_marginals",
    "update_alpha",
    "compute_labels",
    "factor_tc",
    "fit_layer",
    "fit_best",
    "transform",
    "hard_labels",
    "ClusterAssignment",
    "Hierarchy",
    "clusters",
    "prune_variables",
    "live_factors",
    "rank_factors",
    "fit_hierarchy",
    "transform_hierarchy",
    "tree_to_dict",
    "tree_to_dot",
    "ERASURE",
    "LatentTreeSpec",
    "GroundTruth",
    "bec",
    "bsc",
    "generate",
    "EXCLUDED",
    "adjusted_rand_index",
    "binary_factor_accuracy",
    "confusion_matrix",
    "__version__",
]
