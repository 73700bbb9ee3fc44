import os
import subprocess
import sys

import numpy as np
import pytest

from treebasin import backend
from treebasin.architecture import ArchitectureSpec, TreeKind, init_params, layout_for


def _kernel_args(spec, params, rng, rows=32):
    lay = layout_for(spec)
    X = rng.normal(size=(rows, spec.features))
    y = rng.integers(0, spec.classes, size=rows)
    return X, y, lay


@pytest.mark.parametrize("kind", list(TreeKind), ids=[k.value for k in TreeKind])
def test_numba_and_numpy_kernels_agree(kind):
    if not backend.numba_available():
        pytest.skip("numba not installed")
    rng = np.random.default_rng(0)
    spec = ArchitectureSpec(kind, 3, 6, 5, 3)
    params = init_params(spec, 1)
    X, y, lay = _kernel_args(spec, params, rng)
    args = (X, params.w, params.b, params.pi, lay.path_nodes, lay.path_sides, lay.path_len)
    nb, np_ = backend.kernels("numba"), backend.kernels("numpy")

    assert np.allclose(nb.leaf_flows(*args[:3], *args[4:]), np_.leaf_flows(*args[:3], *args[4:]), rtol=1e-12, atol=1e-14)
    assert np.allclose(nb.per_tree_logits(*args), np_.per_tree_logits(*args), rtol=1e-10, atol=1e-13)
    assert np.allclose(nb.ensemble_logits(*args), np_.ensemble_logits(*args), rtol=1e-10, atol=1e-13)

    frozen = -1 if spec.frozen_leaf is None else spec.frozen_leaf
    loss_nb, gw_nb, gb_nb, gpi_nb = nb.loss_and_grads(X, y, *args[1:], frozen)
    loss_np, gw_np, gb_np, gpi_np = np_.loss_and_grads(X, y, *args[1:], frozen)
    assert abs(loss_nb - loss_np) < 1e-12
    for a, b in ((gw_nb, gw_np), (gb_nb, gb_np), (gpi_nb, gpi_np)):
        assert np.allclose(a, b, rtol=1e-10, atol=1e-14)


def test_env_flag_selects_numpy_backend():
    code = "import treebasin; print(treebasin.active_backend())"
    env = dict(os.environ, TREEBASIN_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "numpy"


def test_set_backend_override_and_validation():
    backend.set_backend("numpy")
    try:
        assert backend.active_backend() == "numpy"
    finally:
        backend.set_backend(None)
    with pytest.raises(ValueError):
        backend.set_backend("fortran")
