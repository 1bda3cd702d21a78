"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``GAUGEFORGE_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _vm_py

_compiled = None
if not os.environ.get("GAUGEFORGE_PURE_PYTHON"):
    try:
        _compiled = importlib.import_module("gaugeforge._vm")
    except ImportError:
        _compiled = None

_active = _compiled or _vm_py


def current():
    return _active


def available() -> dict:
    out = {"python": _vm_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def use(name: str) -> None:
    """Switch the process-wide kernel to ``"python"`` or ``"cython"``."""
    global _active
    kernels = available()
    if name not in kernels:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(kernels)}")
    _active = kernels[name]


def name() -> str:
    return _active.NAME
