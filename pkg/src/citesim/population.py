"""Cohort team sizes and the intrinsic (direct-citation) weight they imply."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmptyCohortError, IngestionError, ParameterError

TEAM_CSV_HEADER = ("paper_id", "team_size")
DEFAULT_CAP = 30


@dataclass(frozen=True)
class TeamGenParams:
    """Mixture of a shifted-Poisson core and a truncated discrete power-law tail.

    The defaults put the mode at 2 authors and give a tail reaching several
    hundred authors for a cohort of a few thousand papers, with about 1% of
    papers at or above the default cap of 30.
    """

    core_mean: float = 2.6
    tail_exponent: float = 1.8
    tail_fraction: float = 0.2
    max_size: int = 600

    def __post_init__(self):
        if not (math.isfinite(self.core_mean) and self.core_mean >= 1.0):
            # the core is 1 + Poisson(core_mean - 1)
            raise ParameterError(f"core_mean must be >= 1, got {self.core_mean}")
        if not (math.isfinite(self.tail_exponent) and self.tail_exponent > 1.0):
            raise ParameterError(f"tail_exponent must be > 1, got {self.tail_exponent}")
        if not 0.0 <= self.tail_fraction <= 1.0:
            raise ParameterError(f"tail_fraction must be in [0, 1], got {self.tail_fraction}")
        if int(self.max_size) != self.max_size or self.max_size < 1:
            raise ParameterError(f"max_size must be a positive integer, got {self.max_size}")

    @classmethod
    def from_dict(cls, d: dict) -> "TeamGenParams":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown team generator fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DirectTransform:
    """Maps a team size to a direct-citation weight: ``c * min(n, cap) ** gamma``.

    ``identity`` is ``min(n, cap)`` and ``constant`` is ``c`` regardless of n.
    """

    kind: str = "identity"
    c: float = 1.0
    gamma: float = 1.0
    cap: int = DEFAULT_CAP

    KINDS = ("identity", "power", "constant")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"transform kind must be one of {self.KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise ParameterError(f"transform c must be > 0, got {self.c}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ParameterError(f"transform gamma must be >= 0, got {self.gamma}")
        if int(self.cap) != self.cap or self.cap < 1:
            raise ParameterError(f"transform cap must be a positive integer, got {self.cap}")

    @classmethod
    def from_dict(cls, d: dict) -> "DirectTransform":
        unknown = set(d) - {"kind", "c", "gamma", "cap"}
        if unknown:
            raise ParameterError(f"unknown transform fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c, "gamma": self.gamma, "cap": self.cap}


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _truncated_zeta_cdf(exponent: float, max_size: int) -> np.ndarray:
    k = np.arange(1, max_size + 1, dtype=float)
    pmf = k ** (-exponent)
    cdf = np.cumsum(pmf)
    return cdf / cdf[-1]


def gen_team_sizes(params: TeamGenParams, n: int, rng=None) -> np.ndarray:
    """Draw ``n`` synthetic team sizes.

    Each paper is, with probability ``1 - tail_fraction``, ``1 + Poisson(core_mean - 1)``
    (clipped to ``max_size``) and otherwise a draw from the discrete power law
    ``P(k) ~ k ** -tail_exponent`` on ``1..max_size``. ``rng`` may be a numpy
    Generator or anything ``numpy.random.default_rng`` accepts.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"cohort size must be >= 1, got {n}")
    n = int(n)
    g = _as_rng(rng)
    u_mix = g.random(n)
    core = 1 + g.poisson(params.core_mean - 1.0, n)
    cdf = _truncated_zeta_cdf(params.tail_exponent, int(params.max_size))
    tail = np.searchsorted(cdf, g.random(n), side="right") + 1
    tail = np.minimum(tail, params.max_size)
    sizes = np.where(u_mix < params.tail_fraction, tail, np.minimum(core, params.max_size))
    return sizes.astype(np.int64)


def load_team_sizes(rows: Iterable) -> np.ndarray:
    """Validate parsed team-size values (one per paper, in paper-id order)."""
    sizes = []
    for row, value in enumerate(rows):
        try:
            text = str(value).strip()
            size = int(text)
            if str(size) != text.lstrip("+"):
                raise ValueError
        except (TypeError, ValueError):
            raise IngestionError(f"row {row}: team size {value!r} is not an integer") from None
        if size < 1:
            raise IngestionError(f"row {row}: team size must be >= 1, got {size}")
        sizes.append(size)
    if not sizes:
        raise EmptyCohortError("team file contains no papers")
    return np.asarray(sizes, dtype=np.int64)


def read_team_csv(path) -> np.ndarray:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyCohortError(f"{path}: empty file")
        if tuple(h.strip() for h in header) != TEAM_CSV_HEADER:
            raise IngestionError(f"{path}: expected header {','.join(TEAM_CSV_HEADER)}, got {','.join(header)}")
        values = []
        for row, rec in enumerate(reader):
            if len(rec) != 2:
                raise IngestionError(f"{path}: row {row}: expected 2 fields, got {len(rec)}")
            if rec[0].strip() != str(row):
                raise IngestionError(f"{path}: row {row}: paper_id {rec[0]!r} out of order (expected {row})")
            values.append(rec[1])
    try:
        return load_team_sizes(values)
    except IngestionError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def team_csv_text(sizes) -> str:
    lines = [",".join(TEAM_CSV_HEADER)]
    lines += [f"{i},{int(s)}" for i, s in enumerate(sizes)]
    return "\n".join(lines) + "\n"


def intrinsic_weight(team_size: int, t: DirectTransform) -> float:
    capped = min(int(team_size), int(t.cap))
    if t.kind == "identity":
        return float(capped)
    if t.kind == "constant":
        return float(t.c)
    return t.c * float(capped) ** t.gamma


def intrinsic_weights(sizes, t: DirectTransform) -> np.ndarray:
    """Vectorised :func:`intrinsic_weight`; values are identical to the scalar path."""
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.size and sizes.min() < 1:
        raise ParameterError("team sizes must be >= 1")
    uniq, inv = np.unique(sizes, return_inverse=True)
    table = np.array([intrinsic_weight(s, t) for s in uniq.tolist()], dtype=float)
    return table[inv].reshape(sizes.shape)


def team_size_histogram(sizes) -> dict[int, int]:
    counts = Counter(int(s) for s in np.asarray(sizes).ravel())
    return dict(sorted(counts.items()))
