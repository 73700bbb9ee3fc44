"""Model checkpoint files.

JSON layout::

    {"format_version": 1,
     "spec": {"kind": ..., "depth": ..., "trees": ..., "features": ..., "classes": ...},
     "trees": [{"w": [[...]], "b": [...], "pi": [[...]]}, ...]}

Floats are written with Python's shortest round-trip representation, so
reloading reproduces every 64-bit value exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .architecture import ArchitectureSpec, EnsembleParams

FORMAT_VERSION = 1


def save_checkpoint(params: EnsembleParams, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "spec": params.spec.to_dict(),
        "trees": [
            {"w": t.w.tolist(), "b": t.b.tolist(), "pi": t.pi.tolist()}
            for t in params.trees
        ],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path) -> EnsembleParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format_version {version!r}")
    spec = ArchitectureSpec.from_dict(doc["spec"])
    trees = doc["trees"]
    if len(trees) != spec.trees:
        raise ValueError(f"checkpoint lists {len(trees)} trees, spec says {spec.trees}")
    import numpy as np

    w = np.array([t["w"] for t in trees], dtype=np.float64)
    b = np.array([t["b"] for t in trees], dtype=np.float64)
    pi = np.array([t["pi"] for t in trees], dtype=np.float64)
    return EnsembleParams(spec, w, b, pi)
