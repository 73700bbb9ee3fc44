import csv
import json
import subprocess
import sys

import numpy as np
import pytest

import treebasin.invariance as invariance
from treebasin.checkpoint import load_checkpoint, save_checkpoint
from treebasin.cli import (
    ExperimentConfig,
    build_parser,
    config_hash,
    main,
    run_matrix,
    run_verify,
)
from treebasin.data import load_csv

SMALL = dict(
    synth={"n": 400, "features": 4, "classes": 2, "separation": 3.0, "seed": 1},
    trees=4,
    epochs=2,
    batch_size=64,
    lr_candidates=(0.01,),
    seeds_a=(1,),
    seeds_b=(2,),
    lambda_steps=4,
)


def _args(*pairs):
    return [a for pair in pairs for a in pair]


def small_flags(out, extra=()):
    return [
        "--synth", "n=400,features=4,classes=2,separation=3.0,seed=1",
        "--trees", "4", "--epochs", "2", "--batch-size", "64",
        "--lr-candidates", "0.01", "--seeds-a", "1", "--seeds-b", "2",
        "--lambda-steps", "4", "--out", str(out), *extra,
    ]


def test_synth_command_writes_loadable_csv(tmp_path):
    out = tmp_path / "blobs.csv"
    assert main(["synth", "--n", "50", "--features", "3", "--classes", "2",
                 "--separation", "2.0", "--seed", "4", "--out", str(out)]) == 0
    ds = load_csv(out)
    assert ds.n_rows == 50 and ds.n_features == 3


def test_synth_command_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["synth", "--n", "30", "--features", "2", "--out", str(a)])
    main(["synth", "--n", "30", "--features", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_train_command_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["train", *small_flags(out)]) == 0
    summary = json.loads((out / "train_summary.json").read_text())
    assert {r["seed"] for r in summary["runs"]} == {1, 2}
    for run in summary["runs"]:
        assert (out / run["checkpoint"]).exists()
        best = max(
            run["candidate_final_accuracy"].items(),
            key=lambda kv: (kv[1], float(kv[0])),
        )
        assert float(best[0]) == run["selected_lr"]
    assert (out / "history.csv").exists()
    assert (out / "run.json").exists()
    assert (out / "preprocessed" / "preprocess.json").exists()
    ckpt = load_checkpoint(out / summary["runs"][0]["checkpoint"])
    other = load_checkpoint(out / summary["runs"][1]["checkpoint"])
    assert not ckpt.equals_exactly(other)


def test_train_rerun_is_byte_identical(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    main(["train", *small_flags(out1)])
    main(["train", *small_flags(out2)])
    for name in ("train_summary.json", "history.csv"):
        a = (out1 / name).read_text().replace(str(out1), "")
        b = (out2 / name).read_text().replace(str(out2), "")
        assert a == b
    ck1 = sorted(p.name for p in out1.glob("ckpt_*.json"))
    for name in ck1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_match_command_naive_emits_identity(tmp_path):
    out = tmp_path / "run"
    main(["train", *small_flags(out)])
    align = tmp_path / "align.json"
    code = main([
        "match", *small_flags(out),
        "--ckpt-a", str(out / "ckpt_seed1.json"),
        "--ckpt-b", str(out / "ckpt_seed2.json"),
        "--invariances", "naive",
        "--alignment-out", str(align),
    ])
    assert code == 0
    doc = json.loads(align.read_text())
    assert doc["p"] == list(range(4)) and doc["q"] == [0] * 4


def test_match_command_recovers_shuffled_copy(tmp_path, rng):
    from treebasin.architecture import ArchitectureSpec, EnsembleParams, TreeKind, init_params
    from treebasin.invariance import adjust_tree, enumerate_ops

    spec = ArchitectureSpec(TreeKind.OBLIVIOUS, 2, 4, 4, 2)
    A = init_params(spec, 0)
    ops = enumerate_ops(spec)
    perm = rng.permutation(4)
    q = rng.integers(0, len(ops), size=4)
    B = EnsembleParams.from_trees(
        spec, [adjust_tree(A.tree(int(perm[j])), ops[int(q[j])], spec) for j in range(4)]
    )
    ca, cb = tmp_path / "a.json", tmp_path / "b.json"
    save_checkpoint(A, ca)
    save_checkpoint(B, cb)
    align = tmp_path / "align.json"
    assert main(["match", *small_flags(tmp_path / "m"), "--matching", "wm",
                 "--ckpt-a", str(ca), "--ckpt-b", str(cb),
                 "--alignment-out", str(align)]) == 0
    doc = json.loads(align.read_text())
    assert doc["p"] == perm.tolist() and doc["q"] == q.tolist()


def test_barrier_single_pair_lambda_grid(tmp_path):
    out = tmp_path / "run"
    main(["train", *small_flags(out)])
    bout = tmp_path / "bar"
    code = main([
        "barrier", *small_flags(bout), "--lambda-steps", "24",
        "--ckpt-a", str(out / "ckpt_seed1.json"),
        "--ckpt-b", str(out / "ckpt_seed2.json"),
    ])
    assert code == 0
    with (bout / "curves.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    lams = sorted({float(r["lambda"]) for r in rows})
    assert lams == [k / 24 for k in range(25)]
    summary = json.loads((bout / "summary.json").read_text())
    assert summary["barriers"]["train"] >= 0.0


def test_barrier_matrix_levels_share_endpoints_and_std(tmp_path):
    cfg = ExperimentConfig(**SMALL, out=str(tmp_path / "mx"))
    summary = run_matrix(cfg)
    pair = summary["pairs"][0]
    with (tmp_path / "mx" / pair["curves_csv"]).open() as fh:
        rows = list(csv.DictReader(fh))
    for split in ("train", "test"):
        for lam, key in (("0.0", "b"), ("1.0", "a")):
            accs = {
                float(r["accuracy"])
                for r in rows
                if r["split"] == split and r["lambda"] == lam
            }
            assert accs == {pair["endpoint_accuracy"][key][split]}
    # std over per-pair values matches a direct recomputation
    for level in ("naive", "perm", "full"):
        agg = summary["aggregate"][level]["train"]
        values = np.array(agg["per_pair"])
        expected = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        assert agg["std"] == expected


def test_merge_split_reference_matches_full_data_training(tmp_path):
    merge_cfg = dict(SMALL, synth={"n": 400, "features": 4, "classes": 2,
                                   "separation": 6.0, "seed": 3})
    cfg = ExperimentConfig(**merge_cfg, out=str(tmp_path / "ms"))
    from treebasin.cli import prepare_data, run_merge_split, spec_for, train_config
    from treebasin.model import accuracy
    from treebasin.training import select_learning_rate

    summary = run_merge_split(cfg)
    train_set, test_set, _, _, _ = prepare_data(cfg)
    spec = spec_for(cfg, train_set)
    sel = select_learning_rate(spec, train_set, train_config(cfg, cfg.seeds_a[0]))
    assert summary["pairs"][0]["full_data_reference_accuracy"] == accuracy(sel.params, test_set)
    assert (tmp_path / "ms" / "merge_curves.csv").exists()


def test_merge_split_rejects_multiclass(tmp_path):
    cfg_kw = dict(SMALL, synth={"n": 300, "features": 4, "classes": 3,
                                "separation": 3.0, "seed": 1})
    cfg = ExperimentConfig(**cfg_kw, out=str(tmp_path / "ms"))
    from treebasin.cli import run_merge_split

    with pytest.raises(ValueError):
        run_merge_split(cfg)


def test_verify_command_passes():
    assert main(["verify", "--trials", "2"]) == 0


def test_verify_exit_code_on_injected_bug(monkeypatch, capsys):
    real = invariance.adjust_tree

    def buggy(tree, op, spec):
        out = real(tree, op, spec)
        if not op.is_identity:
            out.w = -out.w
        return out

    monkeypatch.setattr(invariance, "adjust_tree", buggy)
    assert main(["verify", "--trials", "2"]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_usage_errors_exit_with_code_one():
    proc = subprocess.run(
        [sys.executable, "-m", "treebasin.cli", "train", "--no-such-flag"],
        capture_output=True,
    )
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "treebasin.cli"], capture_output=True)
    assert proc.returncode == 1


def test_missing_dataset_is_a_usage_error(tmp_path):
    assert main(["train", "--out", str(tmp_path / "x")]) == 1
    assert main(["train", "--dataset", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "x")]) == 1


def test_config_file_with_cli_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({
        "synth": {"n": 400, "features": 4, "classes": 2, "separation": 3.0, "seed": 1},
        "trees": 4, "epochs": 2, "batch_size": 64, "lr_candidates": [0.01],
        "seeds_a": [1], "seeds_b": [2], "lambda_steps": 4,
    }))
    parser = build_parser()
    args = parser.parse_args(["train", "--config", str(cfg_file),
                              "--epochs", "3", "--out", str(tmp_path / "o")])
    from treebasin.cli import build_config

    cfg = build_config(args)
    assert cfg.epochs == 3  # CLI wins
    assert cfg.trees == 4  # file value retained
    base = build_config(parser.parse_args(["train", "--config", str(cfg_file),
                                           "--out", str(tmp_path / "o")]))
    assert config_hash(cfg) != config_hash(base)


def test_parallel_jobs_match_serial_execution(tmp_path):
    base = dict(SMALL, seeds_a=(1, 3), seeds_b=(2, 4))
    serial = run_matrix(ExperimentConfig(**base, jobs=1, out=str(tmp_path / "serial")))
    parallel = run_matrix(ExperimentConfig(**base, jobs=2, out=str(tmp_path / "parallel")))
    assert json.dumps(serial["aggregate"]) == json.dumps(parallel["aggregate"])
    for f in sorted((tmp_path / "serial").glob("*.csv")):
        assert f.read_bytes() == (tmp_path / "parallel" / f.name).read_bytes()


def test_preset_sets_scale(tmp_path):
    parser = build_parser()
    from treebasin.cli import build_config

    cfg = build_config(parser.parse_args(
        ["train", "--preset", "large", "--synth", "n=100,features=2",
         "--out", str(tmp_path / "o")]
    ))
    assert cfg.trees == 256 and cfg.epochs == 50
