"""Brute-force cross-checks, kept deliberately independent of the fast
paths they validate.  Shipped (not test-only) so the CLI can expose a
``verify`` subcommand for user-defined architectures."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import invariance
from .architecture import ArchitectureSpec, TreeKind, TreeParams
from .model import tree_forward


@dataclass
class OracleReport:
    cases: int
    max_deviation: float
    first_failure: str | None = None

    @property
    def passed(self) -> bool:
        return self.first_failure is None


def brute_force_lap(S, maximize: bool = False) -> np.ndarray:
    """Exhaustive assignment search; M <= 8.  Returns the
    lexicographically smallest permutation among the optima."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    M = S.shape[0]
    if M > 8:
        raise ValueError(f"brute force is capped at 8x8, got {M}x{M}")
    best_p = None
    best_total = None
    for perm in itertools.permutations(range(M)):
        total = 0.0
        for j in range(M):
            total += S[perm[j], j]
        if best_total is None:
            better = True
        elif maximize:
            better = total > best_total
        else:
            better = total < best_total
        if better:
            best_total = total
            best_p = perm
    return np.array(best_p, dtype=np.int64)


def expand_oblivious(tree: TreeParams, spec: ArchitectureSpec) -> TreeParams:
    """Materialize an oblivious tree as the equivalent non-oblivious
    perfect binary tree by copying each depth's rule into every node
    position at that depth."""
    if spec.kind is not TreeKind.OBLIVIOUS:
        raise ValueError("expansion is defined for oblivious trees only")
    n_nodes = 2**spec.depth - 1
    w = np.empty((spec.features, n_nodes))
    b = np.empty(n_nodes)
    for n in range(n_nodes):
        d = (n + 1).bit_length() - 1
        w[:, n] = tree.w[:, d]
        b[n] = tree.b[d]
    return TreeParams(w, b, tree.pi.copy())


def _random_tree(spec: ArchitectureSpec, rng) -> TreeParams:
    w = rng.uniform(-1.0, 1.0, size=(spec.features, spec.node_count))
    b = rng.uniform(-1.0, 1.0, size=spec.node_count)
    pi = rng.uniform(-1.0, 1.0, size=(spec.classes, spec.leaf_count))
    if spec.frozen_leaf is not None:
        pi[:, spec.frozen_leaf] = 0.0
    return TreeParams(w, b, pi)


def equivalence_sweep(
    spec: ArchitectureSpec,
    trials: int = 10,
    inputs_per_tree: int = 20,
    tol: float = 1e-12,
    seed: int = 0,
    budget: int = invariance.DEFAULT_OP_BUDGET,
) -> OracleReport:
    """For random trees and every enumerated operation, measure the worst
    forward deviation between the adjusted and the original tree."""
    ops = invariance.enumerate_ops(spec, budget=budget)
    rng = np.random.default_rng(seed)
    worst = 0.0
    first_failure = None
    cases = 0
    for trial in range(trials):
        tree = _random_tree(spec, rng)
        X = rng.normal(size=(inputs_per_tree, spec.features))
        base = np.stack([tree_forward(x, tree, spec) for x in X])
        for u, op in enumerate(ops):
            adjusted = invariance.adjust_tree(tree, op, spec)
            out = np.stack([tree_forward(x, adjusted, spec) for x in X])
            dev = float(np.max(np.abs(out - base)))
            worst = max(worst, dev)
            cases += 1
            if dev >= tol and first_failure is None:
                first_failure = (
                    f"trial {trial}, op {u}: deviation {dev:.3e} >= {tol:.0e}"
                )
    return OracleReport(cases, worst, first_failure)
