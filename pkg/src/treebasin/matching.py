"""Tree-to-tree alignment between two ensembles.

Weight matching scores every (transformation, tree-of-A, tree-of-B)
triple by the inner product of weighted parameter vectors; activation
matching scores tree pairs by the inner product of their per-tree
outputs on sampled inputs.  Either way a single linear assignment over
the M x M similarity matrix pairs the trees, and the best per-pair
transformation is kept.  The returned alignment transforms A toward a
fixed B and never changes A's function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.optimize

from .architecture import ArchitectureSpec, EnsembleParams, spec_hash
from .invariance import InvarianceOp, adjust_tree, enumerate_ops, weighting
from .model import batch_per_tree_logits

ALIGNMENT_FORMAT_VERSION = 1


def _solve_min(C: np.ndarray) -> np.ndarray:
    rows, cols = scipy.optimize.linear_sum_assignment(C)
    p = np.empty(C.shape[0], dtype=np.int64)
    p[cols] = rows
    return p


def linear_sum_assignment(S, maximize: bool = False) -> np.ndarray:
    """Exact square assignment: returns p maximizing (or minimizing)
    sum_j S[p[j], j]; among optimal permutations the lexicographically
    smallest is returned.

    The refinement pass compares assignment totals with ``math.fsum``,
    whose correctly-rounded results are independent of summation order,
    so equally-valued assignments are recognized as exact ties.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError("similarity matrix must be finite")
    C = -S if maximize else S
    M = C.shape[0]

    # Greedy lexicographic refinement: `completion` always holds an
    # optimal extension of the committed prefix, so for each column only
    # rows smaller than its completion row need a trial solve.
    completion = _solve_min(C)
    best_total = math.fsum(C[completion[j], j] for j in range(M))
    p = np.empty(M, dtype=np.int64)
    used = np.zeros(M, dtype=bool)
    prefix: list[float] = []
    columns = np.arange(M)
    for j in range(M):
        chosen = int(completion[j])
        for r in range(chosen):
            if used[r]:
                continue
            rest_rows = [x for x in range(M) if not used[x] and x != r]
            if rest_rows:
                sub = C[np.ix_(rest_rows, columns[j + 1 :])]
                sub_p = _solve_min(sub)
                tail = [sub[sub_p[k], k] for k in range(M - j - 1)]
            else:
                sub_p, tail = None, []
            if math.fsum(prefix + [C[r, j]] + tail) == best_total:
                chosen = r
                if sub_p is not None:
                    completion[j + 1 :] = [rest_rows[sub_p[k]] for k in range(M - j - 1)]
                break
        p[j] = chosen
        used[chosen] = True
        prefix.append(C[chosen, j])
    return p


@dataclass
class Alignment:
    """Tree permutation ``p`` and per-tree operation indices ``q``.

    Aligned tree j is ``adjust_tree(A.trees[p[j]], ops[q[j]])``; indices
    are 0-based into :func:`treebasin.invariance.enumerate_ops`.
    """

    p: np.ndarray
    q: np.ndarray
    method: str
    spec: ArchitectureSpec

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.int64)
        self.q = np.asarray(self.q, dtype=np.int64)
        M = self.spec.trees
        if sorted(self.p.tolist()) != list(range(M)):
            raise ValueError("p must be a permutation of the tree indices")
        if self.q.shape != (M,) or self.q.min() < 0:
            raise ValueError("q must hold one operation index per tree")


def identity_alignment(spec: ArchitectureSpec, method: str = "naive") -> Alignment:
    M = spec.trees
    return Alignment(np.arange(M), np.zeros(M, dtype=np.int64), method, spec)


def _check_shared_spec(A: EnsembleParams, B: EnsembleParams) -> ArchitectureSpec:
    if A.spec != B.spec:
        raise ValueError("both ensembles must share one architecture")
    return A.spec


def _ops_for(spec: ArchitectureSpec, invariances: str) -> list[InvarianceOp]:
    if invariances == "perm":
        return enumerate_ops(spec)[:1]
    if invariances == "full":
        return enumerate_ops(spec)
    raise ValueError(f"unknown invariance level {invariances!r}")


def similarity_tensor(
    A: EnsembleParams, B: EnsembleParams, ops: list[InvarianceOp]
) -> np.ndarray:
    """S[u, mA, mB]: inner products of weighted, op-adjusted parameters."""
    spec = _check_shared_spec(A, B)
    wA, wB = weighting(A), weighting(B)
    M = spec.trees
    flatB = np.stack([wB.tree(m).flatten() for m in range(M)])
    S = np.empty((len(ops), M, M))
    for u, op in enumerate(ops):
        for mA in range(M):
            theta = adjust_tree(wA.tree(mA), op, spec).flatten()
            S[u, mA, :] = flatB @ theta
    return S


def weight_matching(
    A: EnsembleParams, B: EnsembleParams, invariances: str = "full"
) -> Alignment:
    """Align by comparing weighted parameter vectors directly."""
    spec = _check_shared_spec(A, B)
    ops = _ops_for(spec, invariances)
    S = similarity_tensor(A, B, ops)
    p = linear_sum_assignment(S.max(axis=0), maximize=True)
    q = np.argmax(S, axis=0)[p, np.arange(spec.trees)]
    return Alignment(p, q, "wm", spec)


def activation_matching(
    A: EnsembleParams, B: EnsembleParams, samples, invariances: str = "full"
) -> Alignment:
    """Align by comparing per-tree outputs on sampled inputs, then pick
    each pair's operation on the weighted parameters."""
    spec = _check_shared_spec(A, B)
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != spec.features:
        raise ValueError(f"samples must be (n, {spec.features}), got {samples.shape}")
    if samples.shape[0] < 1:
        raise ValueError("at least one sample is required")
    ops = _ops_for(spec, invariances)
    M = spec.trees

    outA = batch_per_tree_logits(samples, A)  # (n, M, C)
    outB = batch_per_tree_logits(samples, B)
    flatA = outA.transpose(1, 0, 2).reshape(M, -1)
    flatB = outB.transpose(1, 0, 2).reshape(M, -1)
    p = linear_sum_assignment(flatA @ flatB.T, maximize=True)

    wA, wB = weighting(A), weighting(B)
    q = np.empty(M, dtype=np.int64)
    for j in range(M):
        target = wB.tree(j).flatten()
        scores = np.array(
            [adjust_tree(wA.tree(p[j]), op, spec).flatten() @ target for op in ops]
        )
        q[j] = int(np.argmax(scores))
    return Alignment(p, q, "am", spec)


def apply_alignment(A: EnsembleParams, alignment: Alignment) -> EnsembleParams:
    """Materialize the alignment; the result is functionally equal to A."""
    if alignment.spec != A.spec:
        raise ValueError("alignment was computed for a different architecture")
    ops = enumerate_ops(A.spec)
    if alignment.q.max() >= len(ops):
        raise ValueError("operation index out of range for this architecture")
    trees = [
        adjust_tree(A.tree(int(alignment.p[j])), ops[int(alignment.q[j])], A.spec)
        for j in range(A.spec.trees)
    ]
    return EnsembleParams.from_trees(A.spec, trees)


def save_alignment(alignment: Alignment, path) -> None:
    doc = {
        "format_version": ALIGNMENT_FORMAT_VERSION,
        "p": alignment.p.tolist(),
        "q": alignment.q.tolist(),
        "method": alignment.method,
        "spec_hash": spec_hash(alignment.spec),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_alignment(path, spec: ArchitectureSpec) -> Alignment:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != ALIGNMENT_FORMAT_VERSION:
        raise ValueError("unsupported alignment format_version")
    if doc.get("spec_hash") != spec_hash(spec):
        raise ValueError("alignment was computed for a different architecture")
    return Alignment(np.array(doc["p"]), np.array(doc["q"]), doc["method"], spec)
