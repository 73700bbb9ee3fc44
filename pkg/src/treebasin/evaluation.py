"""Linear interpolation between ensembles and accuracy barriers.

The barrier along the path lam * A + (1 - lam) * B is the largest gap
between the linearly interpolated endpoint accuracies and the accuracy
of the interpolated model, taken over a lambda grid that includes both
endpoints (so the barrier is never negative).  Gaps are computed as
lam * (acc_A - acc_lam) + (1 - lam) * (acc_B - acc_lam), which is exact
when the curve is flat.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .architecture import EnsembleParams
from .matching import activation_matching, apply_alignment, weight_matching
from .model import accuracy, batch_logits
from .training import cross_entropy

INVARIANCE_LEVELS = ("naive", "perm", "full")
CURVE_COLUMNS = ("method", "matching", "split", "lambda", "accuracy")


def lambda_grid(steps: int = 24) -> np.ndarray:
    """Ascending grid k/steps for k = 0..steps; always contains 0 and 1."""
    if steps < 1:
        raise ValueError("lambda grid needs at least one interval")
    return np.arange(steps + 1) / steps


def interpolate(A: EnsembleParams, B: EnsembleParams, lam: float) -> EnsembleParams:
    """Element-wise lam * A + (1 - lam) * B; lam = 1 returns A exactly."""
    if A.spec != B.spec:
        raise ValueError("cannot interpolate across architectures")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return EnsembleParams(
        A.spec,
        lam * A.w + (1.0 - lam) * B.w,
        lam * A.b + (1.0 - lam) * B.b,
        lam * A.pi + (1.0 - lam) * B.pi,
    )


@dataclass
class BarrierCurve:
    lambdas: np.ndarray
    accuracy: np.ndarray
    accuracy_a: float  # endpoint at lambda = 1
    accuracy_b: float  # endpoint at lambda = 0
    barrier: float


def _mean_loss(params: EnsembleParams, dataset) -> float:
    logits = batch_logits(dataset.features, params)
    return float(
        np.mean([cross_entropy(logits[i], int(l)) for i, l in enumerate(dataset.labels)])
    )


def barrier(
    A: EnsembleParams, B: EnsembleParams, dataset, grid=None, metric: str = "accuracy"
) -> BarrierCurve:
    """Evaluate the interpolation curve and its barrier on one dataset.

    ``metric`` is "accuracy" (default, higher is better) or "loss"
    (mean cross-entropy, lower is better, subtraction order reversed).
    """
    if len(np.asarray(dataset.labels)) == 0:
        raise ValueError("cannot evaluate a barrier on an empty dataset")
    grid = lambda_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must ascend from 0 to 1")
    if metric == "accuracy":
        score = accuracy
    elif metric == "loss":
        score = _mean_loss
    else:
        raise ValueError(f"unknown metric {metric!r}")

    values = np.array([score(interpolate(A, B, lam), dataset) for lam in grid])
    score_a, score_b = values[-1], values[0]
    gaps = grid * (score_a - values) + (1.0 - grid) * (score_b - values)
    if metric == "loss":
        gaps = -gaps
    return BarrierCurve(grid, values, float(score_a), float(score_b), float(gaps.max()))


def _aligned(A, B, level, matching, am_samples):
    if level == "naive":
        return A
    if matching == "wm":
        alignment = weight_matching(A, B, invariances=level)
    elif matching == "am":
        if am_samples is None:
            raise ValueError("activation matching needs sample inputs")
        alignment = activation_matching(A, B, am_samples, invariances=level)
    else:
        raise ValueError(f"unknown matching method {matching!r}")
    return apply_alignment(A, alignment)


def barrier_suite(
    A: EnsembleParams,
    B: EnsembleParams,
    train_set,
    test_set,
    matching: str = "wm",
    levels=INVARIANCE_LEVELS,
    lambda_steps: int = 24,
    am_samples=None,
) -> dict[str, dict[str, BarrierCurve]]:
    """Barrier curves per invariance level ("naive" interpolates as-is,
    "perm" permutes trees only, "full" also applies flip/order
    transformations) on the train and test splits."""
    grid = lambda_grid(lambda_steps)
    out: dict[str, dict[str, BarrierCurve]] = {}
    for level in levels:
        aligned = _aligned(A, B, level, matching, am_samples)
        out[level] = {
            "train": barrier(aligned, B, train_set, grid),
            "test": barrier(aligned, B, test_set, grid),
        }
    return out


def curve_rows(curves: dict, matching: str) -> list[dict]:
    """Flatten a barrier_suite result into report rows."""
    rows = []
    for level, splits in curves.items():
        for split, curve in splits.items():
            for lam, acc in zip(curve.lambdas, curve.accuracy):
                rows.append(
                    {
                        "method": level,
                        "matching": matching,
                        "split": split,
                        "lambda": repr(float(lam)),
                        "accuracy": repr(float(acc)),
                    }
                )
    return rows


def write_curves_csv(path, rows: list[dict]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
