"""Weighted index sampling: the log-time tree plus a linear-scan reference.

``WeightIndex`` comes from the compiled core when available. The functional
wrappers below exist so callers and tests can treat the tree and the oracle
through the same signature.
"""
from __future__ import annotations

import math

from ._backend import BACKEND, DEFAULT_REBUILD_EVERY, WeightIndex
from .errors import EmptySupportError, ParameterError

__all__ = ["BACKEND", "WeightIndex", "build", "sample", "update", "oracle_sample"]


def build(weights, rebuild_every: int = DEFAULT_REBUILD_EVERY) -> WeightIndex:
    return WeightIndex(weights, rebuild_every)


def sample(ix: WeightIndex, u: float) -> int:
    return ix.sample(u)


def update(ix: WeightIndex, i: int, new_weight: float) -> None:
    ix.update(i, new_weight)


def oracle_sample(weights, u: float) -> int:
    """Smallest ``i`` with ``sum(weights[:i+1]) > u * sum(weights)``, by linear scan."""
    ws = [float(w) for w in weights]
    for w in ws:
        if not (w >= 0.0) or math.isinf(w):
            raise ParameterError(f"weight must be finite and >= 0, got {w!r}")
    total = 0.0
    for w in ws:
        total += w
    if total <= 0.0:
        raise EmptySupportError("total weight is zero")
    target = u * total
    acc = 0.0
    for i, w in enumerate(ws):
        acc += w
        if acc > target:
            return i
    # u * total rounded up to total: fall back to the last supported slot
    i = len(ws) - 1
    while i > 0 and ws[i] == 0.0:
        i -= 1
    return i
