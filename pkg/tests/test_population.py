import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citesim.errors import EmptyCohortError, IngestionError, ParameterError
from citesim.population import (
    DirectTransform,
    TeamGenParams,
    gen_team_sizes,
    intrinsic_weight,
    intrinsic_weights,
    load_team_sizes,
    read_team_csv,
    team_csv_text,
    team_size_histogram,
)


def test_degenerate_core_gives_all_ones():
    p = TeamGenParams(core_mean=1.0, tail_fraction=0.0)
    assert gen_team_sizes(p, 5, 0).tolist() == [1, 1, 1, 1, 1]


@pytest.mark.parametrize("seed", range(5))
def test_default_generator_shape(seed):
    sizes = gen_team_sizes(TeamGenParams(), 6430, seed)
    h = team_size_histogram(sizes)
    mode = max(h, key=lambda k: (h[k], -k))
    assert mode in (2, 3)
    assert h.get(1, 0) > 0
    assert sum(c for k, c in h.items() if k > 100) > 0
    assert 200 <= sizes.max() <= 600


def test_tail_ccdf_slope_matches_truncated_zeta():
    p = TeamGenParams(tail_fraction=1.0, tail_exponent=2.5, max_size=500)
    sizes = gen_team_sizes(p, 10**6, 123)
    # exact CCDF by direct summation of the truncated pmf
    k = np.arange(1, 501, dtype=float)
    pmf = k**-2.5
    pmf /= pmf.sum()
    exact_ccdf = pmf[::-1].cumsum()[::-1]
    ks = np.unique(np.round(np.logspace(np.log10(5), 2, 20)).astype(int))
    emp = np.array([(sizes >= kk).mean() for kk in ks])
    slope_emp = np.polyfit(np.log10(ks), np.log10(emp), 1)[0]
    slope_exact = np.polyfit(np.log10(ks), np.log10(exact_ccdf[ks - 1]), 1)[0]
    assert abs(slope_emp - slope_exact) < 0.02
    assert abs(slope_emp + 1.5) < 0.1


def test_generator_is_reproducible():
    p = TeamGenParams()
    a = gen_team_sizes(p, 1000, 42)
    b = gen_team_sizes(p, 1000, np.random.default_rng(42))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gen_team_sizes(p, 1000, 43))


@pytest.mark.parametrize("kw", [
    {"core_mean": 0.5},
    {"tail_exponent": 1.0},
    {"tail_fraction": 1.5},
    {"max_size": 0},
    {"core_mean": float("nan")},
])
def test_invalid_generator_params(kw):
    with pytest.raises(ParameterError):
        TeamGenParams(**kw)


@pytest.mark.parametrize("n", [0, -3])
def test_invalid_cohort_size(n):
    with pytest.raises(ParameterError):
        gen_team_sizes(TeamGenParams(), n, 0)


def test_params_from_dict_rejects_unknown():
    assert TeamGenParams.from_dict({"core_mean": 3.0}).core_mean == 3.0
    with pytest.raises(ParameterError):
        TeamGenParams.from_dict({"core": 3.0})


def test_load_passthrough():
    assert load_team_sizes([3, 1, 200]).tolist() == [3, 1, 200]
    assert load_team_sizes(["3", " 1", "200"]).tolist() == [3, 1, 200]


def test_load_empty():
    with pytest.raises(EmptyCohortError):
        load_team_sizes([])


@pytest.mark.parametrize("bad,row", [(["2", "0"], 1), (["x"], 0), (["1", "2", "-4"], 2), (["1.5"], 0)])
def test_load_rejects_bad_rows(bad, row):
    with pytest.raises(IngestionError, match=f"row {row}"):
        load_team_sizes(bad)


def test_csv_round_trip(tmp_path):
    sizes = gen_team_sizes(TeamGenParams(), 300, 1)
    path = tmp_path / "teams.csv"
    path.write_text(team_csv_text(sizes))
    assert np.array_equal(read_team_csv(path), sizes)
    assert path.read_text().startswith("paper_id,team_size\n0,")


def test_csv_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    with pytest.raises(EmptyCohortError):
        read_team_csv(p)
    p.write_text("paper_id,team_size\n")
    with pytest.raises(EmptyCohortError):
        read_team_csv(p)
    p.write_text("id,size\n0,1\n")
    with pytest.raises(IngestionError, match="header"):
        read_team_csv(p)
    p.write_text("paper_id,team_size\n0,1\n2,3\n")
    with pytest.raises(IngestionError, match="out of order"):
        read_team_csv(p)
    p.write_text("paper_id,team_size\n0,1\n1,0\n")
    with pytest.raises(IngestionError, match="row 1"):
        read_team_csv(p)


def test_intrinsic_weight_examples():
    ident = DirectTransform()
    assert intrinsic_weight(5, ident) == 5
    assert intrinsic_weight(200, ident) == 30
    assert intrinsic_weight(7, DirectTransform(kind="constant", c=2.5)) == 2.5


def test_power_weight_against_mpmath():
    t = DirectTransform(kind="power", c=1.0, gamma=0.3)
    mpmath.mp.dps = 50
    exact = mpmath.power(4, mpmath.mpf("0.3"))
    assert abs(intrinsic_weight(4, t) - float(exact)) < 1e-14
    assert round(intrinsic_weight(4, t), 4) == 1.5157


def test_vectorised_weights_match_scalar():
    t = DirectTransform(kind="power", c=1.7, gamma=0.45, cap=25)
    sizes = gen_team_sizes(TeamGenParams(), 2000, 5)
    vec = intrinsic_weights(sizes, t)
    assert vec.tolist() == [intrinsic_weight(s, t) for s in sizes.tolist()]


def test_histogram_examples():
    assert team_size_histogram([1, 2, 2, 3]) == {1: 1, 2: 2, 3: 1}
    assert team_size_histogram([]) == {}


@settings(max_examples=60, deadline=None)
@given(
    core_mean=st.floats(1.0, 8.0),
    tail_exponent=st.floats(1.1, 4.0),
    tail_fraction=st.floats(0.0, 1.0),
    max_size=st.integers(1, 800),
    n=st.integers(1, 400),
    seed=st.integers(0, 2**32),
)
def test_generated_sizes_in_range(core_mean, tail_exponent, tail_fraction, max_size, n, seed):
    p = TeamGenParams(core_mean, tail_exponent, tail_fraction, max_size)
    sizes = gen_team_sizes(p, n, seed)
    assert len(sizes) == n
    assert sizes.min() >= 1 and sizes.max() <= max_size
    assert np.array_equal(sizes, gen_team_sizes(p, n, seed))
    assert sum(team_size_histogram(sizes).values()) == n


@settings(max_examples=200, deadline=None)
@given(
    gamma=st.floats(0.0, 3.0),
    c=st.floats(0.01, 100.0),
    cap=st.integers(1, 100),
    k=st.integers(1, 1000),
)
def test_weight_monotone_and_flat_above_cap(gamma, c, cap, k):
    t = DirectTransform(kind="power", c=c, gamma=gamma, cap=cap)
    assert intrinsic_weight(k + 1, t) >= intrinsic_weight(k, t)
    if k >= cap:
        assert intrinsic_weight(k, t) == intrinsic_weight(cap, t)
    assert intrinsic_weight(k, DirectTransform(cap=cap)) == min(k, cap)
    assert math.isfinite(intrinsic_weight(k, t))
