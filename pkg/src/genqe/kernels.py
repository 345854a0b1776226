"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy implementation is
the fallback. Set ``GENQE_PURE_PYTHON=1`` to force the fallback (used by
tests and the benchmark).
"""

import os

from . import _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _kernels = None

_FORCE_PY = os.environ.get("GENQE_PURE_PYTHON", "") not in ("", "0")

active = _kernels_py if (_kernels is None or _FORCE_PY) else _kernels

BACKEND = active.NAME


def available_backends() -> list[str]:
    names = [_kernels_py.NAME]
    if _kernels is not None:
        names.insert(0, _kernels.NAME)
    return names


def get_backend(name: str | None = None):
    """Return a kernel module by name ("cython" or "python"); None = active."""
    if name is None:
        return active
    if name == _kernels_py.NAME:
        return _kernels_py
    if _kernels is not None and name == _kernels.NAME:
        return _kernels
    raise ValueError(f"kernel backend {name!r} not available (have {available_backends()})")
