"""Acceptance suite: one test per release criterion, each printing a
single [PASS]/[FAIL] line (run with ``pytest -s`` to see them live).

The heavyweight criteria (5, 6, 8) share one experiment-matrix run per
dataset through a module-scoped fixture.
"""

import csv
import time
from pathlib import Path

import numpy as np
import pytest

from treebasin.architecture import ArchitectureSpec, EnsembleParams, TreeKind, init_params
from treebasin.cli import ExperimentConfig, run_matrix, run_merge_split
from treebasin.data import synth_gaussian_blobs
from treebasin.evaluation import barrier, barrier_suite, lambda_grid
from treebasin.invariance import adjust_tree, enumerate_ops, op_count
from treebasin.matching import (
    activation_matching,
    apply_alignment,
    linear_sum_assignment,
    weight_matching,
)
from treebasin.model import accuracy, tree_forward
from treebasin.oracle import brute_force_lap, equivalence_sweep, expand_oblivious
from treebasin.training import loss_and_gradients

from conftest import random_tree

DATASET_1 = {"n": 8000, "features": 10, "classes": 4, "separation": 2.0, "seed": 101}
DATASET_2 = {"n": 8000, "features": 8, "classes": 4, "separation": 2.0, "seed": 202}
MERGE_DATASET = {"n": 8000, "features": 8, "classes": 2, "separation": 1.5, "seed": 101}


def _matrix_config(synth, out):
    return ExperimentConfig(synth=synth, trees=64, depth=2, epochs=50, out=str(out))


def _report(criterion, passed, detail):
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def matrix_runs(tmp_path_factory):
    runs = {}
    for name, synth in (("ds1", DATASET_1), ("ds2", DATASET_2)):
        out = tmp_path_factory.mktemp(f"matrix_{name}")
        config = _matrix_config(synth, out)
        runs[name] = (config, run_matrix(config), Path(out))
    return runs


def test_criterion_1_invariance_equivalence_suite():
    expected_counts = {
        TreeKind.NON_OBLIVIOUS: {1: 2, 2: 8, 3: 128},
        TreeKind.OBLIVIOUS: {1: 2, 2: 8, 3: 48},
        TreeKind.DECISION_LIST: {1: 2, 2: 2, 3: 2},
        TreeKind.MODIFIED_DECISION_LIST: {1: 1, 2: 1, 3: 1},
    }
    start = time.perf_counter()
    worst = 0.0
    for kind, by_depth in expected_counts.items():
        for depth, expected in by_depth.items():
            spec = ArchitectureSpec(kind, depth, 1, 5, 3)
            assert op_count(spec) == expected, (kind, depth)
            report = equivalence_sweep(spec, trials=10, inputs_per_tree=20)
            assert report.passed, report.first_failure
            worst = max(worst, report.max_deviation)
    elapsed = time.perf_counter() - start
    _report(
        1,
        worst < 1e-12 and elapsed < 60.0,
        f"max forward deviation {worst:.3e}, op counts exact, {elapsed:.1f}s",
    )


def test_criterion_2_gradient_correctness():
    spec = ArchitectureSpec(TreeKind.NON_OBLIVIOUS, 2, 2, 3, 2)
    rng = np.random.default_rng(7)
    params = init_params(spec, 3)
    X = rng.normal(size=(8, 3))
    y = rng.integers(0, 2, size=8)
    _, grads = loss_and_gradients(params, X, y)
    h = 1e-6
    worst = 0.0
    for name in ("w", "b", "pi"):
        arr = getattr(params, name)
        analytic = getattr(grads, name)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            lp, _ = loss_and_gradients(params, X, y)
            arr[idx] = orig - h
            lm, _ = loss_and_gradients(params, X, y)
            arr[idx] = orig
            fd = (lp - lm) / (2 * h)
            worst = max(worst, abs(analytic[idx] - fd) / max(abs(analytic[idx]), abs(fd), 1e-8))
    _report(2, worst < 1e-6, f"max relative gradient error {worst:.3e}")


def test_criterion_3_assignment_exactness():
    rng = np.random.default_rng(11)
    checked = 0
    for trial in range(100):
        M = 2 + trial % 5
        S = rng.normal(size=(M, M))
        fast = linear_sum_assignment(S, maximize=True)
        brute = brute_force_lap(S, maximize=True)
        obj_fast = sum(S[fast[j], j] for j in range(M))
        obj_brute = sum(S[brute[j], j] for j in range(M))
        assert obj_fast == obj_brute, f"objective mismatch on trial {trial}"
        checked += 1
    _report(3, checked == 100, f"{checked} matrices, objectives exactly equal")


def test_criterion_4_ground_truth_recovery():
    rng = np.random.default_rng(21)
    grid = lambda_grid(24)
    for kind in TreeKind:
        spec = ArchitectureSpec(kind, 2, 6, 4, 2)
        A = init_params(spec, 31)
        ops = enumerate_ops(spec)
        perm = rng.permutation(spec.trees)
        op_idx = rng.integers(0, len(ops), size=spec.trees)
        B = EnsembleParams.from_trees(
            spec,
            [adjust_tree(A.tree(int(perm[j])), ops[int(op_idx[j])], spec) for j in range(spec.trees)],
        )
        ds = synth_gaussian_blobs(300, 4, 2, separation=2.0, seed=5)
        for method, align in (
            ("wm", weight_matching(A, B)),
            ("am", activation_matching(A, B, rng.normal(size=(512, 4)))),
        ):
            aligned = apply_alignment(A, align)
            assert aligned.equals_exactly(B), f"{kind.value}/{method} not exact"
            curve = barrier(aligned, B, ds, grid)
            assert curve.barrier == 0.0, f"{kind.value}/{method} barrier nonzero"
            assert np.all(curve.accuracy == curve.accuracy[0])
    _report(4, True, "WM and AM recover the construction exactly; barrier 0 at all 25 points")


def test_criterion_5_barrier_ordering(matrix_runs):
    details = []
    ok = True
    for name in ("ds1", "ds2"):
        _, summary, _ = matrix_runs[name]
        agg = summary["aggregate"]
        naive_tr = agg["naive"]["train"]["mean"]
        perm_tr = agg["perm"]["train"]["mean"]
        full_tr = agg["full"]["train"]["mean"]
        naive_te = agg["naive"]["test"]["mean"]
        full_te = agg["full"]["test"]["mean"]
        ordering = naive_tr > perm_tr and perm_tr >= full_tr - 0.2
        reduction = naive_te >= 3.0 * full_te
        ok = ok and ordering and reduction
        details.append(
            f"{name}: train naive {naive_tr:.3f} > perm {perm_tr:.3f} >= full {full_tr:.3f} - 0.2; "
            f"test naive {naive_te:.3f} vs 3x full {3 * full_te:.3f}"
        )
    _report(5, ok, " | ".join(details))


def test_criterion_6_endpoint_fidelity(matrix_runs):
    worst = 0.0
    for name in ("ds1", "ds2"):
        _, summary, out = matrix_runs[name]
        for pair in summary["pairs"]:
            with (out / pair["curves_csv"]).open() as fh:
                rows = list(csv.DictReader(fh))
            for split in ("train", "test"):
                for lam, endpoint in (("0.0", "b"), ("1.0", "a")):
                    expected = pair["endpoint_accuracy"][endpoint][split]
                    got = {
                        float(r["accuracy"])
                        for r in rows
                        if r["split"] == split and r["lambda"] == lam
                    }
                    assert len(got) == 1, "methods disagree at an endpoint"
                    worst = max(worst, abs(got.pop() - expected))
    # anchor the curve endpoints against directly computed accuracies
    spec = ArchitectureSpec(TreeKind.OBLIVIOUS, 2, 8, 4, 2)
    A, B = init_params(spec, 1), init_params(spec, 2)
    ds = synth_gaussian_blobs(200, 4, 2, separation=2.0, seed=3)
    curves = barrier_suite(A, B, ds, ds, matching="wm")
    for level in curves:
        assert curves[level]["train"].accuracy[-1] == accuracy(A, ds)
        assert curves[level]["train"].accuracy[0] == accuracy(B, ds)
    _report(6, worst <= 1e-12, f"max endpoint accuracy deviation {worst:.3e}")


def test_criterion_7_split_data_merging(tmp_path):
    config = ExperimentConfig(
        synth=MERGE_DATASET, trees=64, depth=2, epochs=50, out=str(tmp_path / "merge")
    )
    summary = run_merge_split(config)
    wins = summary["wins"]
    gaps = [
        p["best_interior"]["accuracy"] - max(p["endpoint_accuracy"]["a"], p["endpoint_accuracy"]["b"])
        for p in summary["pairs"]
    ]
    _report(
        7,
        wins >= 4,
        f"merged model beats both endpoints in {wins}/5 pairs "
        f"(margins {', '.join(f'{g:+.2f}' for g in gaps)})",
    )


def test_criterion_8_pipeline_determinism(matrix_runs, tmp_path_factory):
    identical = True
    compared = 0
    for name, synth in (("ds1", DATASET_1), ("ds2", DATASET_2)):
        _, _, first_out = matrix_runs[name]
        rerun_out = tmp_path_factory.mktemp(f"rerun_{name}")
        run_matrix(_matrix_config(synth, rerun_out))
        for csv_path in sorted(first_out.rglob("*.csv")):
            rel = csv_path.relative_to(first_out)
            other = Path(rerun_out) / rel
            same = other.exists() and csv_path.read_bytes() == other.read_bytes()
            identical = identical and same
            compared += 1
        same_summary = (first_out / "summary.json").read_bytes() == (
            Path(rerun_out) / "summary.json"
        ).read_bytes()
        identical = identical and same_summary
    _report(8, identical and compared > 0, f"{compared} CSV files byte-identical across reruns")


def test_criterion_9_oblivious_expansion_and_depth_one_equivalence(tmp_path_factory):
    rng = np.random.default_rng(17)
    spec = ArchitectureSpec(TreeKind.OBLIVIOUS, 3, 1, 4, 3)
    expanded_spec = ArchitectureSpec(TreeKind.NON_OBLIVIOUS, 3, 1, 4, 3)
    worst = 0.0
    for _ in range(100):
        tree = random_tree(spec, rng)
        x = rng.normal(size=4)
        a = tree_forward(x, tree, spec)
        b = tree_forward(x, expand_oblivious(tree, spec), expanded_spec)
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst < 1e-12

    synth = {"n": 2000, "features": 4, "classes": 2, "separation": 2.0, "seed": 7}
    summaries = {}
    outs = {}
    for arch in ("oblivious", "nonoblivious"):
        out = tmp_path_factory.mktemp(f"d1_{arch}")
        config = ExperimentConfig(
            synth=synth, arch=arch, depth=1, trees=8, epochs=5,
            seeds_a=(1, 3), seeds_b=(2, 4), out=str(out),
        )
        summaries[arch] = run_matrix(config)
        outs[arch] = Path(out)
    same_barriers = all(
        summaries["oblivious"]["aggregate"][level][split] == summaries["nonoblivious"]["aggregate"][level][split]
        for level in ("naive", "perm", "full")
        for split in ("train", "test")
    )
    same_curves = all(
        (outs["oblivious"] / p["curves_csv"]).read_bytes()
        == (outs["nonoblivious"] / p["curves_csv"]).read_bytes()
        for p in summaries["oblivious"]["pairs"]
    )
    _report(
        9,
        same_barriers and same_curves,
        f"expansion deviation {worst:.3e}; depth-1 oblivious and non-oblivious pipelines identical",
    )
