"""Kernel backend selection.

The hot numeric kernels exist twice: a numba-compiled version and a pure
numpy one with identical signatures.  The numba path is used whenever
numba imports successfully; set ``TREEBASIN_DISABLE_NUMBA=1`` in the
environment (or call :func:`set_backend`) to force the numpy fallback.
"""

from __future__ import annotations

import os

ENV_FLAG = "TREEBASIN_DISABLE_NUMBA"

_forced: str | None = None
_modules: dict = {}


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


def set_backend(name: str | None) -> None:
    """Force a backend ("numba" or "numpy"); None restores auto-detection."""
    global _forced
    if name not in (None, "numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not numba_available():
        raise ValueError("numba backend requested but numba is not importable")
    _forced = name


def active_backend() -> str:
    if _forced is not None:
        return _forced
    if _env_disabled():
        return "numpy"
    return "numba" if numba_available() else "numpy"


def kernels(name: str | None = None):
    """Return the kernel module for `name` (default: the active backend)."""
    name = name or active_backend()
    if name not in _modules:
        if name == "numba":
            from . import _kernels_numba as impl
        else:
            from . import _kernels_numpy as impl
        _modules[name] = impl
    return _modules[name]
