"""Select the compiled kernels when available, the NumPy ones otherwise.

``FOVENHANCE_BACKEND`` may be ``auto`` (default), ``compiled`` or ``python``.
"""
from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available() -> list[str]:
    return sorted(_BACKENDS)


def _initial():
    choice = os.environ.get("FOVENHANCE_BACKEND", "auto").lower()
    if choice == "auto":
        return _BACKENDS.get("compiled", _pykernels)
    if choice not in _BACKENDS:
        raise ImportError(f"backend {choice!r} unavailable; have {available()}")
    return _BACKENDS[choice]


kernels = _initial()


def name() -> str:
    return kernels.NAME


def set_backend(choice: str) -> None:
    global kernels
    if choice not in _BACKENDS:
        raise ValueError(f"backend {choice!r} unavailable; have {available()}")
    kernels = _BACKENDS[choice]


@contextmanager
def using(choice: str):
    prev = kernels.NAME
    set_backend(choice)
    try:
        yield
    finally:
        set_backend(prev)


def active():
    return kernels
