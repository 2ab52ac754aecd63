"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``TABNAV_PURE=1`` to force the numpy versions.
"""
from __future__ import annotations

import os

from tabnav import _fallback

_compiled = None
if os.environ.get("TABNAV_PURE", "") not in ("1", "true", "yes"):
    try:
        from tabnav import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback

value_iteration = _impl.value_iteration
jacobi_eigh = _impl.jacobi_eigh
sr_td_walk = _impl.sr_td_walk
net_train = _impl.net_train


def backends() -> dict:
    """Both implementations by name, for benchmarks and agreement tests."""
    out = {"python": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
