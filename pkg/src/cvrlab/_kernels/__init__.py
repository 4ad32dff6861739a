"""Routing kernel backend selection.

The compiled extension (_core, Cython) is preferred when importable; the
numpy implementation (pykernels) is the fallback and the reference. Both
produce bit-identical results. Set CVRLAB_PURE_PYTHON=1 to force the
fallback, e.g. to benchmark one against the other.
"""

from __future__ import annotations

import os

from . import pykernels

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_FORCE_PURE = os.environ.get("CVRLAB_PURE_PYTHON", "") not in ("", "0")
_backend = pykernels if (_FORCE_PURE or _core is None) else _core

tsp_subset_costs = _backend.tsp_subset_costs
tsp_order = _backend.tsp_order
best_assignment = _backend.best_assignment

HAVE_COMPILED = _core is not None


def backend_name() -> str:
    """Name of the active backend: 'compiled' or 'python'."""
    return _backend.BACKEND_NAME


def backends() -> dict:
    """All importable backends by name, for parity tests and benchmarks."""
    out = {"python": pykernels}
    if _core is not None:
        out["compiled"] = _core
    return out
