"""Select the compiled core when it is importable, else the pure-Python one.

Set ``CITESIM_PURE_PYTHON=1`` to force the fallback (tests use this to
check that both backends agree).
"""
import os

from . import _pycore

BACKEND = "python"
WeightIndex = _pycore.WeightIndex
run_events = _pycore.run_events

if not os.environ.get("CITESIM_PURE_PYTHON"):
    try:
        from . import _core
    except ImportError:  # extension not built
        _core = None
    if _core is not None:
        BACKEND = "compiled"
        WeightIndex = _core.WeightIndex
        run_events = _core.run_events
else:
    _core = None

INDIRECT_NONE = _pycore.INDIRECT_NONE
INDIRECT_LINEAR = _pycore.INDIRECT_LINEAR
INDIRECT_POWER = _pycore.INDIRECT_POWER
INDIRECT_WEIGHTED = _pycore.INDIRECT_WEIGHTED
DEFAULT_REBUILD_EVERY = _pycore.DEFAULT_REBUILD_EVERY


def backends():
    """Return ``{name: (WeightIndex, run_events)}`` for every available backend."""
    out = {"python": (_pycore.WeightIndex, _pycore.run_events)}
    try:
        from . import _core as compiled
    except ImportError:
        return out
    out["compiled"] = (compiled.WeightIndex, compiled.run_events)
    return out
