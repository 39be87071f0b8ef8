"""Backend selection for the hot loops.

The compiled ``_core`` extension is used when it was built; otherwise the
NumPy/pure-Python ``_pycore`` module takes over with identical results.
"""

from __future__ import annotations

from types import ModuleType

from . import _pycore
from ._pycore import closed_form_terms

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _pycore

__all__ = [
    "closed_form_terms",
    "bracket_array",
    "integrate_probe_response",
    "available_backends",
    "get_backend",
    "set_backend",
    "backend_name",
]


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _pycore
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled backend not built; reinstall with Cython available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def set_backend(name: str) -> str:
    """Switch the active backend; returns the previous backend name."""
    global _active
    previous = _active.BACKEND
    _active = get_backend(name)
    return previous


def backend_name() -> str:
    return _active.BACKEND


def bracket_array(*args):
    return _active.bracket_array(*args)


def integrate_probe_response(*args):
    return _active.integrate_probe_response(*args)

