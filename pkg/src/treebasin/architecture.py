"""Tree architectures, parameter containers, and node/leaf layout.

Four soft-tree families are supported.  All of them route data through
sigmoid gates, so every leaf receives a fractional share of each input:

* ``nonoblivious`` -- perfect binary tree, one (w, b) per splitting node.
* ``oblivious``    -- perfect binary tree sharing one (w, b) per depth.
* ``dlist``        -- decision list: a chain of nodes whose left branch
  terminates in a leaf and whose right branch continues the chain.
* ``dlist-mod``    -- decision list whose terminal right leaf is pinned
  to the zero vector and never trained.

Node and leaf indexing is breadth-first.  In perfect binary trees node
``n`` has children ``2n+1`` (left) and ``2n+2`` (right) with root 0, and
leaf ``l`` encodes its root-to-leaf path in binary with the root decision
as the most significant bit (bit value 1 = went right).  This makes leaf
relocation under depth permutations a pure bit permutation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np


class TreeKind(str, Enum):
    NON_OBLIVIOUS = "nonoblivious"
    OBLIVIOUS = "oblivious"
    DECISION_LIST = "dlist"
    MODIFIED_DECISION_LIST = "dlist-mod"


_PERFECT = (TreeKind.NON_OBLIVIOUS, TreeKind.OBLIVIOUS)
_LISTS = (TreeKind.DECISION_LIST, TreeKind.MODIFIED_DECISION_LIST)


@dataclass(frozen=True)
class ArchitectureSpec:
    """Tree family plus the sizes that fix the parameter layout."""

    kind: TreeKind
    depth: int
    trees: int
    features: int
    classes: int

    def __post_init__(self):
        object.__setattr__(self, "kind", TreeKind(self.kind))
        for name in ("depth", "trees", "features", "classes"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def node_count(self) -> int:
        """Number of distinct (w, b) parameter slots per tree."""
        if self.kind is TreeKind.NON_OBLIVIOUS:
            return 2**self.depth - 1
        return self.depth

    @property
    def leaf_count(self) -> int:
        if self.kind in _PERFECT:
            return 2**self.depth
        return self.depth + 1

    @property
    def frozen_leaf(self) -> int | None:
        """Leaf index pinned to zero, or None if all leaves are trainable."""
        if self.kind is TreeKind.MODIFIED_DECISION_LIST:
            return self.leaf_count - 1
        return None

    @property
    def trainable_leaf_count(self) -> int:
        return self.leaf_count - (self.frozen_leaf is not None)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "depth": self.depth,
            "trees": self.trees,
            "features": self.features,
            "classes": self.classes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureSpec":
        return cls(
            kind=TreeKind(d["kind"]),
            depth=int(d["depth"]),
            trees=int(d["trees"]),
            features=int(d["features"]),
            classes=int(d["classes"]),
        )


def spec_hash(spec: ArchitectureSpec) -> str:
    """Stable hex digest of the architecture, for artifact cross-checks."""
    blob = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class TreeLayout:
    """Per-leaf root-to-leaf paths through the (w, b) parameter slots.

    ``path_nodes[l, d]`` is the parameter slot consulted at step ``d`` on
    the way to leaf ``l`` and ``path_sides[l, d]`` is 0 when the path
    takes the left branch (sigmoid gate) and 1 for the right branch
    (complement).  Paths shorter than ``depth`` are padded; only the
    first ``path_len[l]`` entries are meaningful.
    """

    path_nodes: np.ndarray
    path_sides: np.ndarray
    path_len: np.ndarray
    node_depth: np.ndarray


@lru_cache(maxsize=None)
def tree_layout(kind: TreeKind, depth: int) -> TreeLayout:
    kind = TreeKind(kind)
    if kind in _PERFECT:
        n_leaves = 2**depth
        nodes = np.empty((n_leaves, depth), dtype=np.int64)
        sides = np.empty((n_leaves, depth), dtype=np.int64)
        for leaf in range(n_leaves):
            for d in range(depth):
                if kind is TreeKind.OBLIVIOUS:
                    nodes[leaf, d] = d
                else:
                    nodes[leaf, d] = (1 << d) - 1 + (leaf >> (depth - d))
                sides[leaf, d] = (leaf >> (depth - 1 - d)) & 1
        lengths = np.full(n_leaves, depth, dtype=np.int64)
        if kind is TreeKind.OBLIVIOUS:
            node_depth = np.arange(depth, dtype=np.int64)
        else:
            node_depth = np.array(
                [(n + 1).bit_length() - 1 for n in range(2**depth - 1)], dtype=np.int64
            )
    else:
        # Chain of `depth` nodes; node d's left branch ends in leaf d and
        # the final right branch ends in leaf `depth`.
        n_leaves = depth + 1
        nodes = np.zeros((n_leaves, depth), dtype=np.int64)
        sides = np.zeros((n_leaves, depth), dtype=np.int64)
        lengths = np.empty(n_leaves, dtype=np.int64)
        for leaf in range(depth):
            for d in range(leaf):
                nodes[leaf, d] = d
                sides[leaf, d] = 1
            nodes[leaf, leaf] = leaf
            sides[leaf, leaf] = 0
            lengths[leaf] = leaf + 1
        nodes[depth, :] = np.arange(depth)
        sides[depth, :] = 1
        lengths[depth] = depth
        node_depth = np.arange(depth, dtype=np.int64)
    for arr in (nodes, sides, lengths, node_depth):
        arr.setflags(write=False)
    return TreeLayout(nodes, sides, lengths, node_depth)


def layout_for(spec: ArchitectureSpec) -> TreeLayout:
    return tree_layout(spec.kind, spec.depth)


@dataclass
class TreeParams:
    """One tree: feature weights ``w`` (F x N), thresholds ``b`` (N,),
    and leaf logits ``pi`` (C x L)."""

    w: np.ndarray
    b: np.ndarray
    pi: np.ndarray

    def copy(self) -> "TreeParams":
        return TreeParams(self.w.copy(), self.b.copy(), self.pi.copy())

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w.ravel(), self.b.ravel(), self.pi.ravel()])


@dataclass
class EnsembleParams:
    """All trees of one ensemble, stacked along a leading tree axis.

    ``w`` has shape (M, F, N), ``b`` (M, N), and ``pi`` (M, C, L).
    ``trees`` exposes the per-tree view expected by single-tree
    operations.
    """

    spec: ArchitectureSpec
    w: np.ndarray
    b: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        s = self.spec
        expected = {
            "w": (s.trees, s.features, s.node_count),
            "b": (s.trees, s.node_count),
            "pi": (s.trees, s.classes, s.leaf_count),
        }
        for name, shape in expected.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            setattr(self, name, arr)
        if s.frozen_leaf is not None and np.any(self.pi[:, :, s.frozen_leaf] != 0.0):
            raise ValueError("the pinned empty leaf must stay exactly zero")

    def tree(self, m: int) -> TreeParams:
        return TreeParams(self.w[m], self.b[m], self.pi[m])

    @property
    def trees(self) -> list[TreeParams]:
        return [self.tree(m) for m in range(self.spec.trees)]

    @classmethod
    def from_trees(cls, spec: ArchitectureSpec, trees: list[TreeParams]) -> "EnsembleParams":
        if len(trees) != spec.trees:
            raise ValueError(f"expected {spec.trees} trees, got {len(trees)}")
        return cls(
            spec=spec,
            w=np.stack([t.w for t in trees]),
            b=np.stack([t.b for t in trees]),
            pi=np.stack([t.pi for t in trees]),
        )

    def copy(self) -> "EnsembleParams":
        return EnsembleParams(self.spec, self.w.copy(), self.b.copy(), self.pi.copy())

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w.ravel(), self.b.ravel(), self.pi.ravel()])

    def allclose(self, other: "EnsembleParams", rtol=0.0, atol=0.0) -> bool:
        return (
            self.spec == other.spec
            and np.allclose(self.w, other.w, rtol=rtol, atol=atol)
            and np.allclose(self.b, other.b, rtol=rtol, atol=atol)
            and np.allclose(self.pi, other.pi, rtol=rtol, atol=atol)
        )

    def equals_exactly(self, other: "EnsembleParams") -> bool:
        return (
            self.spec == other.spec
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.pi, other.pi)
        )


def init_params(spec: ArchitectureSpec, seed: int) -> EnsembleParams:
    """Draw fresh parameters, uniform on +-1/sqrt(F) for (w, b) and
    +-1/sqrt(L) for leaf logits.

    Draw order is fixed (per tree: w, then b, then pi) so a given
    (spec, seed) always yields bit-identical parameters.  The pinned
    leaf of ``dlist-mod`` is zeroed after drawing.
    """
    rng = np.random.default_rng(seed)
    bound_wb = 1.0 / np.sqrt(spec.features)
    bound_pi = 1.0 / np.sqrt(spec.leaf_count)
    w = np.empty((spec.trees, spec.features, spec.node_count))
    b = np.empty((spec.trees, spec.node_count))
    pi = np.empty((spec.trees, spec.classes, spec.leaf_count))
    for m in range(spec.trees):
        w[m] = rng.uniform(-bound_wb, bound_wb, size=(spec.features, spec.node_count))
        b[m] = rng.uniform(-bound_wb, bound_wb, size=spec.node_count)
        pi[m] = rng.uniform(-bound_pi, bound_pi, size=(spec.classes, spec.leaf_count))
    if spec.frozen_leaf is not None:
        pi[:, :, spec.frozen_leaf] = 0.0
    return EnsembleParams(spec, w, b, pi)
