"""Recurrent scan kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time from ``GRIDCAST_BACKEND``
(``numba`` or ``numpy``). When unset, numba is used if it imports.
:func:`get_backend` returns either module explicitly, e.g. for benchmarks.
"""

from __future__ import annotations

import logging
import os
from types import ModuleType

from . import _numpy

log = logging.getLogger(__name__)

ENV_FLAG = "GRIDCAST_BACKEND"
KERNELS = ("gru_forward", "gru_backward", "lstm_forward", "lstm_backward", "adam_update")


def get_backend(name: str) -> ModuleType:
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


def _select() -> tuple[str, ModuleType]:
    wanted = os.environ.get(ENV_FLAG, "").strip().lower()
    if wanted == "numpy":
        return "numpy", _numpy
    try:
        return "numba", get_backend("numba")
    except ImportError:
        if wanted == "numba":
            raise
        log.info("numba unavailable, using numpy kernels")
        return "numpy", _numpy


BACKEND, _impl = _select()

gru_forward = _impl.gru_forward
gru_backward = _impl.gru_backward
lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
adam_update = _impl.adam_update
