"""Pure-Python implementation of the hot kernels.

This module mirrors ``_core.pyx`` operation for operation: every floating
point expression is evaluated in the same order so that both backends give
bit-identical results for identical inputs. Keep the two files in sync.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateKernelError, EmptySupportError, ParameterError

# indirect-weight kinds understood by run_events
INDIRECT_NONE = 0
INDIRECT_LINEAR = 1
INDIRECT_POWER = 2
INDIRECT_WEIGHTED = 3

DEFAULT_REBUILD_EVERY = 1 << 20


def _check_weight(w: float) -> float:
    w = float(w)
    if not (w >= 0.0) or math.isinf(w):
        raise ParameterError(f"weight must be finite and >= 0, got {w!r}")
    return w


class WeightIndex:
    """Fenwick tree over nonnegative real weights.

    ``sample(u)`` returns the smallest index ``i`` whose inclusive prefix sum
    exceeds ``u * total``. Updates cost O(log n); the tree is rebuilt from
    the stored weights every ``rebuild_every`` updates to bound drift.
    """

    backend = "python"

    def __init__(self, weights, rebuild_every: int = DEFAULT_REBUILD_EVERY):
        ws = [_check_weight(w) for w in np.asarray(weights, dtype=float).ravel()]
        if not ws:
            raise ParameterError("cannot build an index over zero weights")
        if rebuild_every < 1:
            raise ParameterError("rebuild_every must be >= 1")
        self._n = len(ws)
        self._weights = ws
        self._tree = [0.0] * (self._n + 1)
        top = 1
        while top * 2 <= self._n:
            top *= 2
        self._top = top
        self._updates = 0
        self.rebuild_every = int(rebuild_every)
        self._rebuild()
        if self._total <= 0.0:
            raise EmptySupportError("all weights are zero")

    def _rebuild(self) -> None:
        n = self._n
        tree = self._tree
        weights = self._weights
        total = 0.0
        for i in range(n):
            tree[i + 1] = weights[i]
            total += weights[i]
        for i in range(1, n + 1):
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self._total = total
        self._updates = 0

    def __len__(self) -> int:
        return self._n

    @property
    def total(self) -> float:
        return self._total

    @property
    def weights(self) -> np.ndarray:
        return np.array(self._weights, dtype=float)

    def prefix_sum(self, i: int) -> float:
        """Inclusive sum of weights[0..i] read from the tree."""
        if not 0 <= i < self._n:
            raise IndexError(i)
        j = i + 1
        s = 0.0
        while j > 0:
            s += self._tree[j]
            j -= j & -j
        return s

    def _find(self, target: float) -> int:
        n = self._n
        tree = self._tree
        pos = 0
        acc = 0.0
        step = self._top
        # compare accumulated prefix sums, not a running remainder: when
        # prefix sums are exact this matches a linear scan bit for bit
        while step:
            nxt = pos + step
            if nxt <= n:
                s = acc + tree[nxt]
                if s <= target:
                    pos = nxt
                    acc = s
            step >>= 1
        # rounding guards: never return past the end or a zero-weight slot
        weights = self._weights
        if pos >= n:
            pos = n - 1
            while pos > 0 and weights[pos] == 0.0:
                pos -= 1
        else:
            while weights[pos] == 0.0 and pos < n - 1:
                pos += 1
            while weights[pos] == 0.0 and pos > 0:
                pos -= 1
        return pos

    def _set(self, i: int, w: float) -> None:
        n = self._n
        tree = self._tree
        delta = w - self._weights[i]
        self._weights[i] = w
        self._total += delta
        j = i + 1
        while j <= n:
            tree[j] += delta
            j += j & -j
        self._updates += 1
        if self._updates >= self.rebuild_every:
            self._rebuild()

    def sample(self, u: float) -> int:
        if self._total <= 0.0:
            raise EmptySupportError("total weight is zero")
        return self._find(u * self._total)

    def sample_many(self, us) -> np.ndarray:
        if self._total <= 0.0:
            raise EmptySupportError("total weight is zero")
        total = self._total
        return np.array([self._find(u * total) for u in np.asarray(us, dtype=float)], dtype=np.int64)

    def update(self, i: int, w: float) -> None:
        if not 0 <= i < self._n:
            raise IndexError(i)
        self._set(int(i), _check_weight(w))


def run_events(
    ix: WeightIndex,
    direct: np.ndarray,
    n_cit: np.ndarray,
    n_direct: np.ndarray,
    s_w: np.ndarray,
    indirect_kind: int,
    beta: float,
    u_sel: np.ndarray,
    u_attr: np.ndarray,
    incr: np.ndarray | None,
) -> int:
    """Apply ``len(u_sel)`` citation events in place; return the direct count."""
    m = len(u_sel)
    if indirect_kind == INDIRECT_WEIGHTED and (incr is None or len(incr) < m):
        raise ParameterError("weighted indirect kind needs one increment per event")
    d = direct.tolist()
    nc = n_cit.tolist()
    nd = n_direct.tolist()
    sw = s_w.tolist()
    us = u_sel.tolist()
    ua = u_attr.tolist()
    inc = incr.tolist() if incr is not None else None
    find = ix._find
    setw = ix._set
    pw = math.pow
    n_dir = 0
    for e in range(m):
        total = ix._total
        if not total > 0.0:
            raise DegenerateKernelError("zero total weight: no paper can be cited")
        i = find(us[e] * total)
        dw = d[i]
        c = nc[i]
        if indirect_kind == INDIRECT_NONE:
            iw = 0.0
        elif indirect_kind == INDIRECT_LINEAR:
            iw = float(c)
        elif indirect_kind == INDIRECT_POWER:
            iw = pw(float(c), beta)
        else:
            iw = sw[i]
        was_direct = ua[e] < dw / (dw + iw)
        c += 1
        nc[i] = c
        if was_direct:
            nd[i] += 1
            n_dir += 1
        if indirect_kind == INDIRECT_WEIGHTED:
            sw[i] += inc[e]
        else:
            sw[i] += 1.0
        if indirect_kind == INDIRECT_NONE:
            niw = 0.0
        elif indirect_kind == INDIRECT_LINEAR:
            niw = float(c)
        elif indirect_kind == INDIRECT_POWER:
            niw = pw(float(c), beta)
        else:
            niw = sw[i]
        setw(i, dw + niw)
    n_cit[:] = nc
    n_direct[:] = nd
    s_w[:] = sw
    return n_dir
