"""Analysis products computed from run snapshots.

Citation distributions are shown on the shifted axis ``x = n_cit + 1`` so
that uncited papers appear. Binning uses exact unit bins up to a threshold
and logarithmic bins of fixed width (in decades) above it; every bin grid
is a prefix of one canonical grid, so distributions built with the same
scheme can be compared bin by bin.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .engine import RunResult, Snapshot
from .errors import IngestionError, ParameterError, SchemeMismatchError, UndefinedDistanceError

DIST_CSV_HEADER = ("bin_lo", "bin_hi", "bin_center", "count", "density")
SHARE_CSV_HEADER = ("period_label", "events", "direct", "indirect", "direct_share")
GM_CSV_HEADER = ("team_lo", "team_hi", "n_papers", "gm")


@dataclass(frozen=True)
class BinningScheme:
    integer_bins_up_to: int = 10
    log_width: float = 0.1

    def __post_init__(self):
        if int(self.integer_bins_up_to) != self.integer_bins_up_to or self.integer_bins_up_to < 1:
            raise ParameterError(f"integer_bins_up_to must be an integer >= 1, got {self.integer_bins_up_to}")
        if not (math.isfinite(self.log_width) and self.log_width > 0):
            raise ParameterError(f"log_width must be > 0, got {self.log_width}")

    @classmethod
    def from_dict(cls, d: dict) -> "BinningScheme":
        unknown = set(d) - {"integer_bins_up_to", "log_width"}
        if unknown:
            raise ParameterError(f"unknown binning fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {"integer_bins_up_to": self.integer_bins_up_to, "log_width": self.log_width}

    def edges(self, xmax: int) -> np.ndarray:
        """Bin edges covering integers ``1..xmax`` (at least one bin)."""
        t = int(self.integer_bins_up_to)
        xmax = max(int(xmax), 1)
        unit = np.arange(min(t, xmax) + 1, dtype=float) + 0.5
        if xmax <= t:
            return unit
        start = t + 0.5

        def edge(k):
            return start * 10.0 ** (k * self.log_width)

        n_log = int(math.floor(math.log10(xmax / start) / self.log_width)) + 1
        # log10 rounding can be off by one either way
        while edge(n_log) <= xmax:
            n_log += 1
        while n_log > 1 and edge(n_log - 1) > xmax:
            n_log -= 1
        log_edges = np.array([edge(k) for k in range(1, n_log + 1)])
        return np.concatenate([unit, log_edges])

    def assign(self, x, edges: np.ndarray) -> np.ndarray:
        """Bin index of each integer ``x >= 1`` under ``edges``."""
        return np.searchsorted(edges, np.asarray(x, dtype=float), side="right") - 1


@dataclass(frozen=True)
class Bin:
    lo: float
    hi: float
    center: float
    count: float
    density: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class BinnedDistribution:
    bins: tuple[Bin, ...]
    n_total: float
    scheme: BinningScheme | None = None

    def mass(self) -> float:
        return math.fsum(b.density * b.width for b in self.bins)

    @property
    def densities(self) -> np.ndarray:
        return np.array([b.density for b in self.bins])

    def modal_bin(self) -> Bin:
        return max(self.bins, key=lambda b: (b.density, -b.lo))


@dataclass(frozen=True)
class DistanceResult:
    decades: float
    n_common: int
    n_excluded: int


def citation_histogram(counts) -> dict[int, int]:
    """Exact value -> number-of-papers map (accepts a Snapshot or an array)."""
    if isinstance(counts, Snapshot):
        counts = counts.n_cit
    c = Counter(np.asarray(counts, dtype=np.int64).ravel().tolist())
    return dict(sorted(c.items()))


def merge_histograms(hists) -> dict[int, int]:
    total = Counter()
    for h in hists:
        total.update(h)
    return dict(sorted(total.items()))


def modal_value(h: dict[int, int]) -> int:
    """Most frequent value; ties go to the smallest value."""
    if not h:
        raise ParameterError("empty histogram has no mode")
    return min(h, key=lambda v: (-h[v], v))


def log_binned(h: dict[int, int], scheme: BinningScheme = BinningScheme()) -> BinnedDistribution:
    n_total = sum(h.values())
    if n_total == 0:
        return BinnedDistribution((), 0, scheme)
    values = np.array(sorted(h), dtype=np.int64)
    if values.min() < 0:
        raise ParameterError("citation counts must be >= 0")
    weights = np.array([h[v] for v in values.tolist()], dtype=float)
    x = values + 1
    edges = scheme.edges(int(x.max()))
    idx = scheme.assign(x, edges)
    counts = np.bincount(idx, weights=weights, minlength=len(edges) - 1)
    t = scheme.integer_bins_up_to
    bins = []
    for k in range(len(edges) - 1):
        lo, hi = float(edges[k]), float(edges[k + 1])
        center = lo + 0.5 if k < t else math.sqrt(lo * hi)
        cnt = float(counts[k])
        bins.append(Bin(lo, hi, center, cnt, cnt / ((hi - lo) * n_total)))
    return BinnedDistribution(tuple(bins), n_total, scheme)


def _check_compatible(a: BinnedDistribution, b: BinnedDistribution) -> None:
    if a.scheme is not None and b.scheme is not None and a.scheme != b.scheme:
        raise SchemeMismatchError(f"binning schemes differ: {a.scheme} vs {b.scheme}")
    # any overlapping pair of bins must be identical
    i = j = 0
    ab, bb = a.bins, b.bins
    while i < len(ab) and j < len(bb):
        x, y = ab[i], bb[j]
        if x.hi <= y.lo:
            i += 1
        elif y.hi <= x.lo:
            j += 1
        else:
            if x.lo != y.lo or x.hi != y.hi:
                raise SchemeMismatchError(
                    f"bin grids differ: [{x.lo}, {x.hi}) overlaps [{y.lo}, {y.hi})"
                )
            i += 1
            j += 1


def distance(a: BinnedDistribution, b: BinnedDistribution) -> DistanceResult:
    """RMS difference of log10 densities over bins nonzero in both, in decades."""
    _check_compatible(a, b)
    da = {(x.lo, x.hi): x.density for x in a.bins}
    db = {(x.lo, x.hi): x.density for x in b.bins}
    keys = set(da) | set(db)
    diffs = []
    for key in keys:
        pa, pb = da.get(key, 0.0), db.get(key, 0.0)
        if pa > 0 and pb > 0:
            diffs.append(math.log10(pa) - math.log10(pb))
    if not diffs:
        raise UndefinedDistanceError("the distributions share no nonzero bin")
    diffs.sort()
    rms = math.sqrt(math.fsum(d * d for d in diffs) / len(diffs))
    return DistanceResult(rms, len(diffs), len(keys) - len(diffs))


@dataclass(frozen=True)
class PeriodShare:
    label: str
    events: int
    direct: int
    indirect: int
    direct_share: float | None


def direct_share_by_period(rr: RunResult) -> list[PeriodShare]:
    """Direct share of the citations received in each inter-checkpoint period.

    A period with no events has an undefined share, reported as ``None``.
    """
    if not rr.periods:
        raise ParameterError("run has no periods")
    out = []
    for p in rr.periods:
        share = p.direct / p.events if p.events > 0 else None
        out.append(PeriodShare(p.label, p.events, p.direct, p.indirect, share))
    return out


def _integer_buckets(values: np.ndarray, scheme: BinningScheme):
    """Group integers >= 1 into unit buckets to the threshold, log buckets above."""
    if values.size == 0:
        return np.array([0.5]), np.zeros(0, dtype=np.int64)
    edges = scheme.edges(int(values.max()))
    return edges, scheme.assign(values, edges)


@dataclass(frozen=True)
class FractionBucket:
    lo: float
    hi: float
    n_papers: int
    mean_fraction: float
    stderr: float


def direct_fraction_by_final_count(snapshot: Snapshot, scheme: BinningScheme = BinningScheme()) -> list[FractionBucket]:
    """Mean per-paper direct fraction, grouped by final citation count.

    Uncited papers are excluded. Buckets are exact counts up to the scheme's
    threshold and logarithmic above; empty buckets are omitted.
    """
    nc = np.asarray(snapshot.n_cit, dtype=np.int64)
    nd = np.asarray(snapshot.n_direct, dtype=np.int64)
    keep = nc > 0
    nc, nd = nc[keep], nd[keep]
    frac = nd / nc
    edges, idx = _integer_buckets(nc, scheme)
    out = []
    for k in range(len(edges) - 1):
        sel = frac[idx == k]
        if sel.size == 0:
            continue
        se = float(sel.std(ddof=1) / math.sqrt(sel.size)) if sel.size > 1 else float("nan")
        out.append(FractionBucket(float(edges[k]), float(edges[k + 1]), int(sel.size), float(sel.mean()), se))
    return out


@dataclass(frozen=True)
class GMBucket:
    team_lo: float
    team_hi: float
    n_papers: int
    gm: float


def geometric_mean_by_team_size(snapshot: Snapshot, teams, scheme: BinningScheme = BinningScheme(),
                                shifted: bool = True) -> list[GMBucket]:
    """Geometric-mean citations per team-size bucket.

    With ``shifted`` (the default) the mean is ``exp(mean(ln(n + 1))) - 1`` so
    that uncited papers count; otherwise uncited papers are dropped and the
    plain geometric mean is used.
    """
    nc = np.asarray(snapshot.n_cit, dtype=np.int64)
    teams = np.asarray(teams, dtype=np.int64)
    if len(teams) != len(nc):
        raise ParameterError(f"{len(teams)} team sizes for {len(nc)} papers")
    edges, idx = _integer_buckets(teams, scheme)
    out = []
    for k in range(len(edges) - 1):
        sel = nc[idx == k]
        if not shifted:
            sel = sel[sel > 0]
        if sel.size == 0:
            continue
        if shifted:
            gm = math.expm1(float(np.mean(np.log1p(sel))))
        else:
            gm = math.exp(float(np.mean(np.log(sel))))
        out.append(GMBucket(float(edges[k]), float(edges[k + 1]), int(sel.size), gm))
    return out


def pool_snapshots(snapshots, teams=None):
    """Concatenate replicate snapshots paper-wise (ensemble pooling).

    Returns the pooled Snapshot, plus the matching tiled team sizes when
    ``teams`` is given.
    """
    snapshots = list(snapshots)
    if not snapshots:
        raise ParameterError("nothing to pool")
    pooled = Snapshot(
        snapshots[0].label,
        sum(s.events for s in snapshots),
        np.concatenate([s.n_cit for s in snapshots]),
        np.concatenate([s.n_direct for s in snapshots]),
    )
    if teams is None:
        return pooled
    return pooled, np.tile(np.asarray(teams, dtype=np.int64), len(snapshots))


def poisson_gof(counts, mean: float, min_expected: float = 5.0):
    """Chi-square goodness of fit of per-paper counts against Poisson(mean).

    Adjacent values are merged until every group's expected frequency is at
    least ``min_expected``; the last group absorbs the upper tail. ``mean`` is
    treated as known, so the degrees of freedom are ``groups - 1``.
    Returns ``(statistic, dof, p_value)``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.size
    if n == 0 or mean <= 0:
        raise ParameterError("need a nonempty sample and a positive mean")
    kmax = int(max(counts.max(), sps.poisson.isf(1e-12, mean))) + 1
    ks = np.arange(kmax + 1)
    expected = n * sps.poisson.pmf(ks, mean)
    expected[-1] = n * sps.poisson.sf(kmax - 1, mean)
    observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1).astype(float)
    groups_e, groups_o = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            groups_e.append(acc_e)
            groups_o.append(acc_o)
            acc_e = acc_o = 0.0
    if acc_e > 0 or acc_o > 0:
        if groups_e:
            groups_e[-1] += acc_e
            groups_o[-1] += acc_o
        else:
            groups_e.append(acc_e)
            groups_o.append(acc_o)
    e = np.array(groups_e)
    o = np.array(groups_o)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(e) - 1
    if dof < 1:
        return stat, dof, 1.0
    return stat, dof, float(sps.chi2.sf(stat, dof))


# -- CSV formats -------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def distribution_csv_text(bd: BinnedDistribution) -> str:
    return _csv_text(DIST_CSV_HEADER, [
        [_fmt(b.lo), _fmt(b.hi), _fmt(b.center), _fmt(b.count), _fmt(b.density)] for b in bd.bins
    ])


def read_distribution_csv(path) -> BinnedDistribution:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DIST_CSV_HEADER:
            raise IngestionError(f"{path}: expected header {','.join(DIST_CSV_HEADER)}")
        bins = []
        for row, rec in enumerate(reader):
            try:
                lo, hi, center, count, density = (float(v) for v in rec)
            except ValueError:
                raise IngestionError(f"{path}: row {row}: malformed record {rec!r}") from None
            if hi <= lo or count < 0 or density < 0:
                raise IngestionError(f"{path}: row {row}: invalid bin {rec!r}")
            bins.append(Bin(lo, hi, center, count, density))
    for prev, nxt in zip(bins, bins[1:]):
        if nxt.lo < prev.hi:
            raise IngestionError(f"{path}: bins overlap or are not ascending")
    return BinnedDistribution(tuple(bins), sum(b.count for b in bins), None)


def share_csv_text(shares: list[PeriodShare]) -> str:
    return _csv_text(SHARE_CSV_HEADER, [
        [s.label, s.events, s.direct, s.indirect, "" if s.direct_share is None else _fmt(s.direct_share)]
        for s in shares
    ])


def gm_csv_text(buckets: list[GMBucket]) -> str:
    return _csv_text(GM_CSV_HEADER, [[_fmt(b.team_lo), _fmt(b.team_hi), b.n_papers, _fmt(b.gm)] for b in buckets])


def fraction_csv_text(buckets: list[FractionBucket]) -> str:
    return _csv_text(("count_lo", "count_hi", "n_papers", "mean_direct_fraction"),
                     [[_fmt(b.lo), _fmt(b.hi), b.n_papers, _fmt(b.mean_fraction)] for b in buckets])
