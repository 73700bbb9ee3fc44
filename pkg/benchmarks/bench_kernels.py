#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times batched forward evaluation and the fused loss+gradient kernel over
a few ensemble shapes and prints rows/second for each backend plus the
speedup.  Run directly:

    python3 benchmarks/bench_kernels.py [--rows 512] [--repeats 20]
"""

import argparse
import time

import numpy as np

from treebasin import backend
from treebasin.architecture import ArchitectureSpec, TreeKind, init_params, layout_for

SHAPES = [
    ("oblivious D=2 M=64 F=10", ArchitectureSpec(TreeKind.OBLIVIOUS, 2, 64, 10, 4)),
    ("oblivious D=3 M=256 F=44", ArchitectureSpec(TreeKind.OBLIVIOUS, 3, 256, 44, 2)),
    ("nonoblivious D=2 M=256 F=44", ArchitectureSpec(TreeKind.NON_OBLIVIOUS, 2, 256, 44, 2)),
    ("dlist-mod D=4 M=128 F=20", ArchitectureSpec(TreeKind.MODIFIED_DECISION_LIST, 4, 128, 20, 2)),
]


def _time(fn, repeats):
    fn()  # warm-up (and numba compilation)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench(rows: int, repeats: int) -> None:
    rng = np.random.default_rng(0)
    names = ["numpy"] + (["numba"] if backend.numba_available() else [])
    if len(names) == 1:
        print("numba unavailable; timing the numpy fallback only")
    header = f"{'shape':34s} {'kernel':10s}" + "".join(f"{n:>14s}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    print("-" * len(header))

    for label, spec in SHAPES:
        params = init_params(spec, 0)
        lay = layout_for(spec)
        X = rng.normal(size=(rows, spec.features))
        y = rng.integers(0, spec.classes, size=rows)
        frozen = -1 if spec.frozen_leaf is None else spec.frozen_leaf
        kernels = {
            "forward": lambda k: k.ensemble_logits(
                X, params.w, params.b, params.pi, lay.path_nodes, lay.path_sides, lay.path_len
            ),
            "loss+grad": lambda k: k.loss_and_grads(
                X, y, params.w, params.b, params.pi,
                lay.path_nodes, lay.path_sides, lay.path_len, frozen,
            ),
        }
        for kernel_name, call in kernels.items():
            times = {}
            for name in names:
                impl = backend.kernels(name)
                times[name] = _time(lambda: call(impl), repeats)
            line = f"{label:34s} {kernel_name:10s}"
            for name in names:
                line += f"{rows / times[name]:>11.0f} /s"
            if len(names) == 2:
                line += f"{times['numpy'] / times['numba']:>9.1f}x"
            print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()
    bench(args.rows, args.repeats)


if __name__ == "__main__":
    main()
