"""Kernel selection.

The compiled extension ``_ckernels`` is used when it is importable and the
environment variable ``MEDIANKIT_PURE`` is not set to ``1``; otherwise the
numpy fallback in ``_pykernels`` is used.  ``BACKEND`` names the choice.
"""
from __future__ import annotations

import os

from . import _pykernels

_pure = os.environ.get("MEDIANKIT_PURE") == "1"
try:
    if _pure:
        raise ImportError
    from . import _ckernels as _impl  # type: ignore[attr-defined]

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build
    _impl = _pykernels
    BACKEND = "python"

distance_matrix = _impl.distance_matrix
median_table = _impl.median_table
interval_masks = _impl.interval_masks
hull_closure = _impl.hull_closure

__all__ = ["BACKEND", "distance_matrix", "median_table", "interval_masks", "hull_closure"]
