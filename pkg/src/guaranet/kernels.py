"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
module is used. Set ``GUARANET_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("GUARANET_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if _active is compiled_backend else "python"

cascade = _active.cascade
importance = _active.importance
swap_edges = _active.swap_edges
bfs_sources = _active.bfs_sources
neighbor_arcs = _active.neighbor_arcs
stream_seed = _active.stream_seed
mix64 = _active.mix64


def available_backends():
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["compiled"] = compiled_backend
    return out
