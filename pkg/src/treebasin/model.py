"""Forward evaluation of soft tree ensembles.

The leaf-flow of input x is the product, over the nodes on the leaf's
path, of the sigmoid gate sigma(w_n . x + b_n) for left branches and its
complement for right branches.  A tree's output is the flow-weighted sum
of its leaf logit vectors, and the ensemble output is the sum over trees
(in ascending tree index, so the summation order is canonical).
"""

from __future__ import annotations

import numpy as np

from . import backend
from .architecture import ArchitectureSpec, EnsembleParams, TreeParams, layout_for


def _as_batch(x, features: int) -> np.ndarray:
    X = np.ascontiguousarray(x, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != features:
        raise ValueError(f"expected (n, {features}) inputs, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs must be finite")
    return X


def _single_tree_ensemble(tree: TreeParams, spec: ArchitectureSpec) -> EnsembleParams:
    one = ArchitectureSpec(spec.kind, spec.depth, 1, spec.features, spec.classes)
    return EnsembleParams(one, tree.w[None], tree.b[None], tree.pi[None])


def batch_leaf_flows(X, params: EnsembleParams) -> np.ndarray:
    """Leaf flows for a batch, shape (n, M, L)."""
    X = _as_batch(X, params.spec.features)
    lay = layout_for(params.spec)
    k = backend.kernels()
    return k.leaf_flows(X, params.w, params.b, lay.path_nodes, lay.path_sides, lay.path_len)


def batch_per_tree_logits(X, params: EnsembleParams) -> np.ndarray:
    """Per-tree logits for a batch, shape (n, M, C)."""
    X = _as_batch(X, params.spec.features)
    lay = layout_for(params.spec)
    k = backend.kernels()
    return k.per_tree_logits(
        X, params.w, params.b, params.pi, lay.path_nodes, lay.path_sides, lay.path_len
    )


def batch_logits(X, params: EnsembleParams) -> np.ndarray:
    """Ensemble logits for a batch, shape (n, C)."""
    X = _as_batch(X, params.spec.features)
    lay = layout_for(params.spec)
    k = backend.kernels()
    return k.ensemble_logits(
        X, params.w, params.b, params.pi, lay.path_nodes, lay.path_sides, lay.path_len
    )


def leaf_flow(x, tree: TreeParams, spec: ArchitectureSpec) -> np.ndarray:
    """Fraction of x reaching each leaf; entries lie in (0, 1) and sum to 1."""
    return batch_leaf_flows(x, _single_tree_ensemble(tree, spec))[0, 0]


def tree_forward(x, tree: TreeParams, spec: ArchitectureSpec) -> np.ndarray:
    """Logit vector of a single tree for input x."""
    return batch_per_tree_logits(x, _single_tree_ensemble(tree, spec))[0, 0]


def ensemble_forward(x, params: EnsembleParams) -> np.ndarray:
    """Logit vector of the whole ensemble for input x."""
    return batch_logits(x, params)[0]


def predict(params: EnsembleParams, X) -> np.ndarray:
    """Predicted class per row; argmax ties resolve to the lowest index."""
    return np.argmax(batch_logits(X, params), axis=1)


def accuracy(params: EnsembleParams, dataset) -> float:
    """Percentage of rows whose predicted class matches the label."""
    features = np.asarray(dataset.features, dtype=np.float64)
    labels = np.asarray(dataset.labels)
    if features.shape[0] == 0:
        raise ValueError("cannot score an empty dataset")
    if labels.min() < 0 or labels.max() >= params.spec.classes:
        raise ValueError("labels out of range for this architecture")
    hits = predict(params, features) == labels
    return 100.0 * float(np.count_nonzero(hits)) / labels.shape[0]
