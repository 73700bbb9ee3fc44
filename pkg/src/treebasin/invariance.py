"""Function-preserving parameter transformations of a single tree.

Because sigma(-c) = 1 - sigma(c), negating a node's (w, b) while swapping
its left and right subtrees leaves the tree's function unchanged (subtree
flip).  Oblivious trees additionally admit depth permutations: the shared
per-depth rules can be reordered as long as each leaf is relocated by the
matching permutation (and XOR, when combined with flips) of its path
bits.  Decision lists keep only the flip at the terminal node, and the
modified decision list, whose terminal right leaf is pinned to zero,
keeps no transformation beyond the identity.

Every transformation is a signed relocation of parameter slots, so
applying one is exact in floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .architecture import ArchitectureSpec, EnsembleParams, TreeKind, TreeParams, layout_for

DEFAULT_OP_BUDGET = 10**6


@dataclass(frozen=True)
class InvarianceOp:
    """One function-preserving transformation.

    ``flip_mask`` holds one bit per flippable slot: per original node
    position for non-oblivious trees, per depth for oblivious trees, and
    a single terminal bit for decision lists.  ``depth_perm`` (oblivious
    only) maps new depth d to the old depth it takes its rule from.
    """

    kind: TreeKind
    flip_mask: tuple[int, ...] = ()
    depth_perm: tuple[int, ...] | None = None

    @property
    def is_identity(self) -> bool:
        if any(self.flip_mask):
            return False
        return self.depth_perm is None or self.depth_perm == tuple(range(len(self.depth_perm)))


def op_count(spec: ArchitectureSpec) -> int:
    """Number of per-tree transformations, by architecture family."""
    if spec.kind is TreeKind.NON_OBLIVIOUS:
        exponent = 2**spec.depth - 1
        if exponent >= 64:  # far beyond any sane budget; avoid huge ints
            raise ValueError(
                f"operation count U = 2^{exponent} is astronomically large"
            )
        return 2**exponent
    if spec.kind is TreeKind.OBLIVIOUS:
        return 2**spec.depth * math.factorial(spec.depth)
    if spec.kind is TreeKind.DECISION_LIST:
        return 2
    return 1


def enumerate_ops(
    spec: ArchitectureSpec, budget: int = DEFAULT_OP_BUDGET
) -> list[InvarianceOp]:
    """All transformations in a fixed deterministic order, identity first."""
    U = op_count(spec)
    if U > budget:
        raise ValueError(
            f"operation count U = {U} exceeds the enumeration budget {budget}"
        )
    kind = spec.kind
    if kind is TreeKind.NON_OBLIVIOUS:
        n_nodes = 2**spec.depth - 1
        return [
            InvarianceOp(kind, tuple((m >> n) & 1 for n in range(n_nodes)))
            for m in range(U)
        ]
    if kind is TreeKind.OBLIVIOUS:
        ops = []
        for perm in itertools.permutations(range(spec.depth)):
            for m in range(2**spec.depth):
                mask = tuple((m >> d) & 1 for d in range(spec.depth))
                ops.append(InvarianceOp(kind, mask, perm))
        return ops
    if kind is TreeKind.DECISION_LIST:
        return [InvarianceOp(kind, (0,)), InvarianceOp(kind, (1,))]
    return [InvarianceOp(kind)]


def _perfect_flip_maps(mask: tuple[int, ...], depth: int):
    """Node/leaf relocation maps for a flip mask on a perfect binary tree.

    Processing is root-first: a set bit negates the node currently at
    that position and swaps its child subtree blocks, with the deeper
    mask bits riding along (they are attached to original node ids).
    """
    n_nodes = 2**depth - 1
    n_leaves = 2**depth
    node_src = np.arange(n_nodes)
    node_sign = np.ones(n_nodes)
    leaf_src = np.arange(n_leaves)

    def swap_block(arr, a_start, b_start, length):
        tmp = arr[a_start : a_start + length].copy()
        arr[a_start : a_start + length] = arr[b_start : b_start + length]
        arr[b_start : b_start + length] = tmp

    def rec(pos: int, d: int):
        if d >= depth:
            return
        if mask[node_src[pos]]:
            node_sign[pos] = -node_sign[pos]
            left, right = 2 * pos + 1, 2 * pos + 2
            # node blocks of the two child subtrees at each relative depth
            for k in range(depth - d - 1):
                width = 2**k
                swap_block(node_src, (left + 1) * width - 1, (right + 1) * width - 1, width)
                swap_block(node_sign, (left + 1) * width - 1, (right + 1) * width - 1, width)
            width = 2 ** (depth - d - 1)
            swap_block(leaf_src, (left + 1) * width - n_leaves, (right + 1) * width - n_leaves, width)
        if d + 1 < depth:
            rec(2 * pos + 1, d + 1)
            rec(2 * pos + 2, d + 1)

    rec(0, 0)
    return node_src, node_sign, leaf_src


def _oblivious_leaf_map(perm: tuple[int, ...], mask: tuple[int, ...], depth: int):
    """leaf_src[l] = old leaf whose value lands at new leaf l.

    New-path bit at depth d equals the old-path bit at depth perm[d],
    XORed with the flip bit, so old bit at depth perm[d] = new bit at d
    XOR mask[d].  Path bits are stored root-first (most significant).
    """
    n_leaves = 2**depth
    leaf_src = np.empty(n_leaves, dtype=np.int64)
    for leaf in range(n_leaves):
        src = 0
        for d in range(depth):
            bit = (leaf >> (depth - 1 - d)) & 1
            src |= (bit ^ mask[d]) << (depth - 1 - perm[d])
        leaf_src[leaf] = src
    return leaf_src


def adjust_tree(tree: TreeParams, op: InvarianceOp, spec: ArchitectureSpec) -> TreeParams:
    """Apply one transformation; the result computes the same function."""
    if op.kind is not spec.kind:
        raise ValueError(f"operation for {op.kind} applied to {spec.kind} tree")
    kind = spec.kind
    if kind is TreeKind.NON_OBLIVIOUS:
        if len(op.flip_mask) != spec.node_count:
            raise ValueError("flip mask length does not match node count")
        node_src, node_sign, leaf_src = _perfect_flip_maps(op.flip_mask, spec.depth)
        return TreeParams(
            w=tree.w[:, node_src] * node_sign,
            b=tree.b[node_src] * node_sign,
            pi=tree.pi[:, leaf_src].copy(),
        )
    if kind is TreeKind.OBLIVIOUS:
        perm = op.depth_perm
        if perm is None or sorted(perm) != list(range(spec.depth)):
            raise ValueError("oblivious operation requires a depth permutation")
        if len(op.flip_mask) != spec.depth:
            raise ValueError("flip mask length does not match depth")
        sign = np.where(np.array(op.flip_mask) == 1, -1.0, 1.0)
        perm_idx = np.array(perm)
        leaf_src = _oblivious_leaf_map(perm, op.flip_mask, spec.depth)
        return TreeParams(
            w=tree.w[:, perm_idx] * sign,
            b=tree.b[perm_idx] * sign,
            pi=tree.pi[:, leaf_src].copy(),
        )
    if kind is TreeKind.DECISION_LIST:
        if len(op.flip_mask) != 1:
            raise ValueError("decision-list operation carries a single terminal bit")
        out = tree.copy()
        if op.flip_mask[0]:
            last = spec.node_count - 1
            out.w[:, last] = -out.w[:, last]
            out.b[last] = -out.b[last]
            out.pi[:, [last, last + 1]] = out.pi[:, [last + 1, last]]
        return out
    # modified decision list: identity only
    if op.flip_mask or op.depth_perm is not None:
        raise ValueError("the modified decision list admits only the identity")
    return tree.copy()


@dataclass(frozen=True)
class NodeWeights:
    """Per-slot leaf counts: how many leaves each splitting rule affects
    (reading the tree as a rule set).  Leaves always weigh 1."""

    node_weights: np.ndarray
    leaf_weights: np.ndarray


def node_leaf_counts(spec: ArchitectureSpec) -> NodeWeights:
    lay = layout_for(spec)
    if spec.kind in (TreeKind.NON_OBLIVIOUS, TreeKind.OBLIVIOUS):
        weights = 2.0 ** (spec.depth - lay.node_depth)
    else:
        # chain node d sees leaves d..depth (the pinned leaf still counts)
        weights = (spec.depth + 1 - lay.node_depth).astype(np.float64)
    return NodeWeights(weights, np.ones(spec.leaf_count))


def weighting(params: EnsembleParams) -> EnsembleParams:
    """Copy for similarity computations with each (w, b) scaled by the
    square root of its subtree leaf count; the input is untouched."""
    scale = np.sqrt(node_leaf_counts(params.spec).node_weights)
    return EnsembleParams(
        params.spec,
        params.w * scale,
        params.b * scale,
        params.pi.copy(),
    )
