"""simplexnet: classification against fixed simplex prototypes.

Class centers are pinned to the vertices of a regular simplex inscribed in
an origin-centered hypersphere; a small feedforward network is trained so
samples cluster around their centers, and test samples are classified by
nearest center (Euclidean or cosine, which agree).  Samples far from every
center can be rejected as unknown.
"""

from .data import (
    LabeledDataset,
    OpenSetSplit,
    background_stream,
    blob_anchors,
    gen_background_blobs,
    gen_blobs,
    gen_blobs_with_probes,
    load_csv,
    load_idx,
    make_open_split,
    materialize_split,
    write_idx,
)
from .inference import (
    REJECT,
    Prediction,
    classify_with_rejection,
    nearest_center,
    open_set_score,
    open_set_scores,
    predict_cosine,
    predict_euclid,
)
from .losses import (
    FeatureBatch,
    LossOutput,
    LossSpec,
    dsc_background_loss,
    dsc_loss,
    evaluate_loss,
    fixed_softmax_loss,
    hinge_loss,
)
from .metrics import (
    EvalReport,
    auc_roc,
    center_distance_matrix,
    closed_set_accuracy,
    scatter_stats,
)
from .network import (
    DamBlock,
    DenseLayer,
    NetworkModel,
    ReluLayer,
    attach_dam,
    build_mlp,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from .simplex import (
    DimensionTooSmallError,
    SimplexCenters,
    build_centers,
    build_unit_simplex,
    pairwise_center_distance,
    validate_centers,
)
from .training import Adam, DivergedError, Sgd, TrainConfig, TrainLog, train

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "DamBlock",
    "DenseLayer",
    "DimensionTooSmallError",
    "DivergedError",
    "EvalReport",
    "FeatureBatch",
    "LabeledDataset",
    "LossOutput",
    "LossSpec",
    "NetworkModel",
    "OpenSetSplit",
    "Prediction",
    "REJECT",
    "ReluLayer",
    "Sgd",
    "SimplexCenters",
    "TrainConfig",
    "TrainLog",
    "attach_dam",
    "auc_roc",
    "background_stream",
    "blob_anchors",
    "build_centers",
    "build_mlp",
    "build_unit_simplex",
    "center_distance_matrix",
    "classify_with_rejection",
    "closed_set_accuracy",
    "dsc_background_loss",
    "dsc_loss",
    "evaluate_loss",
    "fixed_softmax_loss",
    "gen_background_blobs",
    "gen_blobs",
    "gen_blobs_with_probes",
    "hinge_loss",
    "init_parameters",
    "load_checkpoint",
    "load_csv",
    "load_idx",
    "make_open_split",
    "materialize_split",
    "nearest_center",
    "open_set_score",
    "open_set_scores",
    "pairwise_center_distance",
    "predict_cosine",
    "predict_euclid",
    "save_checkpoint",
    "scatter_stats",
    "train",
    "validate_centers",
    "write_idx",
]
