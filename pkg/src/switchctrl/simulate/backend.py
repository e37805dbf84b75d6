"""Kernel selection.

The compiled kernel is used when it imports; ``SWITCHCTRL_BACKEND=python``
forces the numpy fallback and ``SWITCHCTRL_BACKEND=cython`` makes a missing
extension an error.
"""
from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _ckernel
except ImportError:          # extension not built
    _ckernel = None

BACKENDS = ("cython", "python")


def available() -> tuple:
    return tuple(b for b in BACKENDS if b == "python" or _ckernel is not None)


def _select(name: str | None) -> str:
    name = (name or os.environ.get("SWITCHCTRL_BACKEND", "auto")).lower()
    if name == "auto":
        return "cython" if _ckernel is not None else "python"
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS} or 'auto'")
    if name == "cython" and _ckernel is None:
        raise ImportError("the compiled kernel switchctrl.simulate._ckernel is not built")
    return name


DEFAULT = _select(None)


def run(model, z0, g0, jump_times, jump_modes, T, record=False, backend=None):
    """Integrate ``len(z0)`` samples of a tabulated model along given mode paths.

    Returns ``(z_T, accumulators, pre_jump, post_jump, snapshots)``; unused jump
    slots of ``pre_jump``/``post_jump`` are NaN and ``snapshots`` is ``None``
    unless ``record``.
    """
    name = DEFAULT if backend is None else _select(backend)
    impl = _ckernel if name == "cython" else _kernel_py
    return impl.run_paths(model, z0, int(g0), jump_times, jump_modes, float(T), bool(record))
