"""Citation event loop over a fixed cohort, with checkpoints and replicate ensembles.

RNG contract
------------
Replicate ``r`` of a run seeded with ``seed`` uses
``numpy.random.SeedSequence(seed, spawn_key=(r,)).spawn(3)``, each child
driving a ``PCG64`` generator:

* child 0, events: ``random((BLOCK_EVENTS, 2))`` per block; column 0 selects
  the cited paper, column 1 decides direct vs indirect attribution. Event
  ``e`` therefore always consumes doubles ``2e`` and ``2e + 1`` of the stream,
  independent of where checkpoints fall.
* child 1, cohort setup (power-law attractiveness draws).
* child 2, citing-item influence draws (influence mode only), one block of
  ``BLOCK_EVENTS`` values at a time.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DegenerateKernelError, EmptySupportError, ParameterError
from .kernels import KernelSpec, cohort_direct_weights

N_PAPERS = 6430
INITIAL_EVENTS = 38_414
FINAL_EVENTS = 263_371
DEFAULT_CHECKPOINTS = (("initial", INITIAL_EVENTS), ("final", FINAL_EVENTS))
BLOCK_EVENTS = 1 << 16
RNG_DESCRIPTION = "PCG64 via SeedSequence(seed, spawn_key=(replicate,)).spawn(3)"


def default_checkpoints(total_events: int) -> tuple[tuple[str, int], ...]:
    """The two pinned checkpoints that fit inside ``total_events``."""
    return tuple((lab, ev) for lab, ev in DEFAULT_CHECKPOINTS if ev <= total_events)


def yearly_checkpoints(first_year: int = 2008, last_year: int = 2017,
                       first_events: int = INITIAL_EVENTS,
                       last_events: int = FINAL_EVENTS) -> tuple[tuple[str, int], ...]:
    """Linear interpolation of cumulative events between two pinned years."""
    if last_year <= first_year:
        return ((str(first_year), first_events),)
    out = []
    for y in range(first_year, last_year + 1):
        frac = (y - first_year) / (last_year - first_year)
        out.append((str(y), int(round(first_events + frac * (last_events - first_events)))))
    return tuple(out)


@dataclass(frozen=True)
class SimulationConfig:
    n_papers: int = N_PAPERS
    total_events: int = FINAL_EVENTS
    checkpoints: tuple = DEFAULT_CHECKPOINTS
    seed: int = 0
    replicates: int = 1

    FIELDS = ("n_papers", "total_events", "checkpoints", "seed", "replicates")

    def __post_init__(self):
        for name in ("n_papers", "total_events", "seed", "replicates"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ParameterError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n_papers < 1:
            raise ParameterError(f"n_papers must be >= 1, got {self.n_papers}")
        if self.total_events < 0:
            raise ParameterError(f"total_events must be >= 0, got {self.total_events}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.replicates < 1:
            raise ParameterError(f"replicates must be >= 1, got {self.replicates}")
        cps = tuple((str(lab), int(ev)) for lab, ev in self.checkpoints)
        prev = 0
        labels = set()
        for lab, ev in cps:
            if ev <= prev:
                raise ParameterError(f"checkpoints must be positive and strictly increasing, got {cps}")
            if ev > self.total_events:
                raise ParameterError(f"checkpoint {lab!r} at {ev} exceeds total_events={self.total_events}")
            if lab in labels:
                raise ParameterError(f"duplicate checkpoint label {lab!r}")
            labels.add(lab)
            prev = ev
        object.__setattr__(self, "checkpoints", cps)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        unknown = set(d) - set(cls.FIELDS)
        if unknown:
            raise ParameterError(f"unknown simulation fields: {sorted(unknown)}")
        kw = dict(d)
        if "checkpoints" in kw:
            cps = kw["checkpoints"]
            if isinstance(cps, dict):
                cps = list(cps.items())
            kw["checkpoints"] = tuple(tuple(c) for c in cps)
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "n_papers": self.n_papers,
            "total_events": self.total_events,
            "checkpoints": [list(c) for c in self.checkpoints],
            "seed": self.seed,
            "replicates": self.replicates,
        }

    def schedule(self) -> list[tuple[str, int]]:
        """Checkpoints plus a trailing final snapshot if the last one stops short."""
        cps = list(self.checkpoints)
        if not cps or cps[-1][1] < self.total_events:
            lab = "end" if any(lab == "final" for lab, _ in cps) else "final"
            cps.append((lab, self.total_events))
        return cps


@dataclass
class Snapshot:
    label: str
    events: int
    n_cit: np.ndarray
    n_direct: np.ndarray

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "events": int(self.events),
            "n_cit": self.n_cit.tolist(),
            "n_direct": self.n_direct.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Snapshot":
        return cls(d["label"], int(d["events"]),
                   np.asarray(d["n_cit"], dtype=np.int64), np.asarray(d["n_direct"], dtype=np.int64))


@dataclass(frozen=True)
class Period:
    label: str
    start: int
    end: int
    direct: int

    @property
    def events(self) -> int:
        return self.end - self.start

    @property
    def indirect(self) -> int:
        return self.events - self.direct

    def to_dict(self) -> dict:
        return {"label": self.label, "start": self.start, "end": self.end,
                "events": self.events, "direct": self.direct, "indirect": self.indirect}


@dataclass
class RunResult:
    snapshots: list[Snapshot]
    periods: list[Period]
    team_sizes: np.ndarray
    kernel: KernelSpec
    seed: int
    replicate: int
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def total_direct(self) -> int:
        return int(self.final.n_direct.sum())

    def snapshot(self, label: str) -> Snapshot:
        for s in self.snapshots:
            if s.label == label:
                return s
        available = ", ".join(s.label for s in self.snapshots)
        raise KeyError(f"no checkpoint {label!r}; available: {available}")

    def to_dict(self) -> dict:
        return {
            "meta": {
                "kernel": self.kernel.to_dict(),
                "seed": self.seed,
                "replicate": self.replicate,
                "n_papers": int(len(self.team_sizes)),
                "rng": RNG_DESCRIPTION,
                **self.meta,
            },
            "team_sizes": self.team_sizes.tolist(),
            "snapshots": [s.to_dict() for s in self.snapshots],
            "periods": [p.to_dict() for p in self.periods],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        meta = dict(d["meta"])
        kernel = KernelSpec.from_dict(meta.pop("kernel"))
        seed = int(meta.pop("seed"))
        rep = int(meta.pop("replicate"))
        meta.pop("n_papers", None)
        meta.pop("rng", None)
        periods = [Period(p["label"], int(p["start"]), int(p["end"]), int(p["direct"])) for p in d["periods"]]
        return cls([Snapshot.from_dict(s) for s in d["snapshots"]], periods,
                   np.asarray(d["team_sizes"], dtype=np.int64), kernel, seed, rep, meta)


def replicate_streams(seed: int, replicate_id: int) -> tuple[np.random.Generator, ...]:
    """(events, setup, influence) generators for one replicate."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate_id),))
    return tuple(np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(3))


class _EventStream:
    """Hands out per-event uniforms (and influence increments) in fixed blocks."""

    def __init__(self, ev_rng, infl_rng, kernel: KernelSpec):
        self._ev = ev_rng
        self._infl = infl_rng
        self._kernel = kernel
        self._weighted = kernel.indirect_kind == _backend.INDIRECT_WEIGHTED
        self._pos = BLOCK_EVENTS
        self._sel = self._attr = self._inc = None

    def _refill(self):
        block = self._ev.random((BLOCK_EVENTS, 2))
        self._sel = np.ascontiguousarray(block[:, 0])
        self._attr = np.ascontiguousarray(block[:, 1])
        if self._weighted:
            self._inc = np.ascontiguousarray(self._kernel.influence.increments(self._infl, BLOCK_EVENTS))
        self._pos = 0

    def take(self, m: int):
        """Yield (u_sel, u_attr, incr) chunks totalling ``m`` events."""
        while m > 0:
            if self._pos >= BLOCK_EVENTS:
                self._refill()
            k = min(m, BLOCK_EVENTS - self._pos)
            sl = slice(self._pos, self._pos + k)
            yield self._sel[sl], self._attr[sl], (self._inc[sl] if self._weighted else None)
            self._pos += k
            m -= k


def run(cfg: SimulationConfig, teams, k: KernelSpec, replicate_id: int = 0, *,
        rebuild_every: int = _backend.DEFAULT_REBUILD_EVERY, backend: str | None = None) -> RunResult:
    """Run one replicate; deterministic in (cfg.seed, replicate_id, teams, k).

    ``backend`` forces ``"python"`` or ``"compiled"``; by default the
    compiled core is used when available.
    """
    teams = np.asarray(teams, dtype=np.int64)
    if len(teams) != cfg.n_papers:
        raise ParameterError(f"cohort has {len(teams)} papers but config expects {cfg.n_papers}")
    if backend is None:
        WeightIndex, run_events = _backend.WeightIndex, _backend.run_events
    else:
        avail = _backend.backends()
        if backend not in avail:
            raise ParameterError(f"backend {backend!r} unavailable; have {sorted(avail)}")
        WeightIndex, run_events = avail[backend]

    ev_rng, setup_rng, infl_rng = replicate_streams(cfg.seed, replicate_id)
    direct = np.ascontiguousarray(cohort_direct_weights(k, teams, setup_rng), dtype=np.float64)
    n = cfg.n_papers
    n_cit = np.zeros(n, dtype=np.int64)
    n_direct = np.zeros(n, dtype=np.int64)
    s_w = np.zeros(n, dtype=np.float64)
    kind = k.indirect_kind

    ix = None
    if cfg.total_events > 0:
        try:
            ix = WeightIndex(direct, rebuild_every)
        except EmptySupportError:
            raise DegenerateKernelError(
                f"kernel {k.mode!r} gives every paper zero weight before any citation"
            ) from None

    stream = _EventStream(ev_rng, infl_rng, k)
    snapshots, periods = [], []
    done = 0
    for label, target in cfg.schedule():
        period_direct = 0
        for u_sel, u_attr, inc in stream.take(target - done):
            period_direct += run_events(ix, direct, n_cit, n_direct, s_w, kind, k.beta, u_sel, u_attr, inc)
        periods.append(Period(label, done, target, int(period_direct)))
        snapshots.append(Snapshot(label, target, n_cit.copy(), n_direct.copy()))
        done = target

    return RunResult(snapshots, periods, teams.copy(), k, cfg.seed, int(replicate_id),
                     {"total_events": cfg.total_events, "checkpoints": [list(c) for c in cfg.checkpoints]})


def run_ensemble(cfg: SimulationConfig, teams, k: KernelSpec, *, workers: int = 1,
                 **run_kw) -> list[RunResult]:
    """Run ``cfg.replicates`` independent replicates, optionally on a thread pool.

    The compiled core releases the GIL inside the event loop, so threads give
    real parallelism there. Results are returned in replicate order.
    """
    def one(r):
        try:
            return run(cfg, teams, k, r, **run_kw)
        except Exception as exc:
            try:
                wrapped = type(exc)(f"replicate {r}: {exc}")
            except Exception:
                raise exc
            raise wrapped from exc

    reps = range(cfg.replicates)
    if workers <= 1 or cfg.replicates == 1:
        return [one(r) for r in reps]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, reps))


def expected_direct_count(A: float, N: int) -> float:
    """Expected number of direct events among the first ``N`` events.

    Valid for kernels whose aggregate direct weight ``A`` is static and where
    each citation adds exactly 1 to the total weight: at event ``E`` the total
    weight is ``A + E``.
    """
    if not A > 0:
        raise ParameterError(f"aggregate direct weight must be > 0, got {A}")
    return math.fsum(A / (A + E) for E in range(int(N)))


def expected_direct_fraction(a: float, c: int) -> float:
    """Expected direct share of a paper with static direct weight ``a`` that ends with ``c`` citations."""
    if c <= 0:
        raise ParameterError("final count must be >= 1")
    return (a / c) * math.fsum(1.0 / (a + n) for n in range(int(c)))
