"""Shared fixtures and independent reference evaluators.

The reference evaluators walk the tree structure explicitly (parent by
parent) instead of using the packaged path tables, so tests that compare
against them exercise genuinely separate traversal logic.
"""

import math

import numpy as np
import pytest

from treebasin.architecture import ArchitectureSpec, TreeKind, TreeParams


def ref_sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def ref_leaf_flow(x, tree: TreeParams, spec: ArchitectureSpec) -> np.ndarray:
    """Per-leaf path products computed by explicit traversal."""
    x = np.asarray(x, dtype=np.float64)
    D = spec.depth
    flows = np.empty(spec.leaf_count)
    if spec.kind in (TreeKind.NON_OBLIVIOUS, TreeKind.OBLIVIOUS):
        for leaf in range(2**D):
            prob = 1.0
            node = 0  # walk down the materialized perfect tree
            for d in range(D):
                slot = d if spec.kind is TreeKind.OBLIVIOUS else node
                gate = ref_sigmoid(float(tree.w[:, slot] @ x + tree.b[slot]))
                go_right = (leaf >> (D - 1 - d)) & 1
                prob *= (1.0 - gate) if go_right else gate
                node = 2 * node + 2 if go_right else 2 * node + 1
            flows[leaf] = prob
    else:
        # chain: stay right until the leaf's own node, then exit left
        gatevals = [ref_sigmoid(float(tree.w[:, d] @ x + tree.b[d])) for d in range(D)]
        for leaf in range(D):
            prob = 1.0
            for d in range(leaf):
                prob *= 1.0 - gatevals[d]
            flows[leaf] = prob * gatevals[leaf]
        flows[D] = np.prod([1.0 - g for g in gatevals])
    return flows


def ref_tree_forward(x, tree: TreeParams, spec: ArchitectureSpec) -> np.ndarray:
    flows = ref_leaf_flow(x, tree, spec)
    return tree.pi @ flows


def ref_ensemble_forward(x, params) -> np.ndarray:
    out = np.zeros(params.spec.classes)
    for tree in params.trees:
        out += ref_tree_forward(x, tree, params.spec)
    return out


def random_tree(spec: ArchitectureSpec, rng) -> TreeParams:
    tree = TreeParams(
        w=rng.uniform(-1, 1, size=(spec.features, spec.node_count)),
        b=rng.uniform(-1, 1, size=spec.node_count),
        pi=rng.uniform(-1, 1, size=(spec.classes, spec.leaf_count)),
    )
    if spec.frozen_leaf is not None:
        tree.pi[:, spec.frozen_leaf] = 0.0
    return tree


ALL_KINDS = list(TreeKind)


@pytest.fixture(params=ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def kind(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
