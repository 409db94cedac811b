"""Kernel backend selection.

The compiled kernel (Cython, ``bmcp._speedups``) is used when importable;
otherwise the pure-Python reference kernel takes over.  Both produce
bit-identical trajectories.  Set ``BMCP_FORCE_PY=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernel_py

PySimState = _kernel_py.PySimState

if os.environ.get("BMCP_FORCE_PY"):
    SimState = PySimState
    BACKEND = "python"
else:
    try:
        from ._speedups import CySimState

        SimState = CySimState
        BACKEND = "cython"
    except ImportError:
        SimState = PySimState
        BACKEND = "python"


def make_state(backend: str | None = None, **kwargs):
    """Instantiate a kernel state; ``backend`` overrides the default choice."""
    if backend is None:
        return SimState(**kwargs)
    if backend == "python":
        return PySimState(**kwargs)
    if backend == "cython":
        from ._speedups import CySimState

        return CySimState(**kwargs)
    raise ValueError(f"unknown backend {backend!r}")
