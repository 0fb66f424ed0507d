from .blend import blend, blend_sweep
from .clustering import (
    Dendrogram,
    DistanceMatrix,
    InvalidMatrixError,
    cluster_labels_csv,
    cut_dendrogram,
    distance_matrix,
    hierarchical_cluster,
)
from .cyclic import NotPeriodicError, closure_report, cyclify

__all__ = [
    "blend",
    "blend_sweep",
    "closure_report",
    "cluster_labels_csv",
    "cut_dendrogram",
    "cyclify",
    "Dendrogram",
    "distance_matrix",
    "DistanceMatrix",
    "hierarchical_cluster",
    "InvalidMatrixError",
    "NotPeriodicError",
]
