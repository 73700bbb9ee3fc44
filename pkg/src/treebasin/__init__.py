"""Soft decision-tree ensembles: gradient training, invariance-aware
alignment of independently trained models, and accuracy barriers along
the linear interpolation path between them."""

from .architecture import (
    ArchitectureSpec,
    EnsembleParams,
    TreeKind,
    TreeParams,
    init_params,
    spec_hash,
)
from .backend import active_backend, set_backend
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    Dataset,
    QuantileTransform,
    class_ratio_split,
    fit_quantile_transform,
    load_csv,
    save_csv,
    subsample_protocol,
    synth_gaussian_blobs,
)
from .evaluation import (
    BarrierCurve,
    barrier,
    barrier_suite,
    interpolate,
    lambda_grid,
)
from .invariance import (
    InvarianceOp,
    NodeWeights,
    adjust_tree,
    enumerate_ops,
    node_leaf_counts,
    op_count,
    weighting,
)
from .matching import (
    Alignment,
    activation_matching,
    apply_alignment,
    identity_alignment,
    linear_sum_assignment,
    load_alignment,
    save_alignment,
    weight_matching,
)
from .model import (
    accuracy,
    batch_leaf_flows,
    batch_logits,
    batch_per_tree_logits,
    ensemble_forward,
    leaf_flow,
    predict,
    tree_forward,
)
from .oracle import OracleReport, brute_force_lap, equivalence_sweep, expand_oblivious
from .training import (
    AdamState,
    Grads,
    LrSelection,
    TrainConfig,
    adam_step,
    cross_entropy,
    gradients,
    loss_and_gradients,
    select_learning_rate,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ArchitectureSpec",
    "EnsembleParams",
    "TreeKind",
    "TreeParams",
    "init_params",
    "spec_hash",
    "active_backend",
    "set_backend",
    "load_checkpoint",
    "save_checkpoint",
    "Dataset",
    "QuantileTransform",
    "class_ratio_split",
    "fit_quantile_transform",
    "load_csv",
    "save_csv",
    "subsample_protocol",
    "synth_gaussian_blobs",
    "BarrierCurve",
    "barrier",
    "barrier_suite",
    "interpolate",
    "lambda_grid",
    "InvarianceOp",
    "NodeWeights",
    "adjust_tree",
    "enumerate_ops",
    "node_leaf_counts",
    "op_count",
    "weighting",
    "Alignment",
    "activation_matching",
    "apply_alignment",
    "identity_alignment",
    "linear_sum_assignment",
    "load_alignment",
    "save_alignment",
    "weight_matching",
    "accuracy",
    "batch_leaf_flows",
    "batch_logits",
    "batch_per_tree_logits",
    "ensemble_forward",
    "leaf_flow",
    "predict",
    "tree_forward",
    "OracleReport",
    "brute_force_lap",
    "equivalence_sweep",
    "expand_oblivious",
    "AdamState",
    "Grads",
    "LrSelection",
    "TrainConfig",
    "adam_step",
    "cross_entropy",
    "gradients",
    "loss_and_gradients",
    "select_learning_rate",
    "train",
]
