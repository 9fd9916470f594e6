import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citesim._backend import backends
from citesim.errors import EmptySupportError, ParameterError
from citesim.kernels import KernelSpec, cohort_direct_weights
from citesim.sampler import build, oracle_sample, sample, update

IMPLS = backends()


@pytest.fixture(params=sorted(IMPLS))
def WI(request):
    return IMPLS[request.param][0]


def test_build_totals(WI):
    assert WI([1, 1, 1, 1]).total == 4
    assert WI([0, 0, 5]).total == 5


def test_build_total_on_generated_cohort(WI, default_teams):
    w = cohort_direct_weights(KernelSpec(mode="team"), default_teams)
    expected = 0.0
    for x in w.tolist():
        expected += x
    assert WI(w).total == expected
    assert expected == float(np.minimum(default_teams, 30).sum())


@pytest.mark.parametrize("weights,u,expected", [
    ([1, 1, 1, 1], 0.30, 1),
    ([0, 0, 5], 0.99, 2),
    ([2, 3, 5], 0.5, 2),
    ([0, 7, 0, 0], 0.0, 1),
    ([0, 7, 0, 0], 0.999999, 1),
])
def test_sample_examples(WI, weights, u, expected):
    assert WI(weights).sample(u) == expected
    assert oracle_sample(weights, u) == expected


def test_update_examples(WI):
    ix = WI([1, 1])
    ix.update(0, 3)
    assert ix.total == 4
    assert ix.sample(0.9) == 1
    assert ix.sample(0.7) == 0


def test_errors(WI):
    with pytest.raises(EmptySupportError):
        WI([0, 0, 0])
    with pytest.raises(ParameterError):
        WI([1, -1])
    with pytest.raises(ParameterError):
        WI([1, float("nan")])
    ix = WI([1, 2])
    with pytest.raises(ParameterError):
        ix.update(0, -0.5)
    with pytest.raises(IndexError):
        ix.update(2, 1.0)
    ix.update(0, 0.0)
    ix.update(1, 0.0)
    with pytest.raises(EmptySupportError):
        ix.sample(0.5)
    with pytest.raises(EmptySupportError):
        oracle_sample([0.0, 0.0], 0.1)


def test_functional_wrappers():
    ix = build([2, 3, 5])
    assert sample(ix, 0.5) == 2
    update(ix, 2, 0.0)
    assert sample(ix, 0.99) == 1


def _random_case(rng):
    n = int(rng.integers(1, 400))
    kind = rng.integers(4)
    if kind == 0:
        w = rng.exponential(size=n)
    elif kind == 1:
        w = rng.integers(0, 40, size=n).astype(float)
    elif kind == 2:
        w = rng.pareto(1.2, size=n) * (rng.random(n) < 0.5)
    else:
        w = np.zeros(n)
        w[rng.integers(n)] = rng.exponential() + 1e-3
    if not w.any():
        w[rng.integers(n)] = 1.0
    return w, float(rng.random())


def test_oracle_equivalence_randomised(WI):
    rng = np.random.default_rng(99)
    for _ in range(10_000):
        w, u = _random_case(rng)
        assert WI(w).sample(u) == oracle_sample(w, u)


def test_oracle_equivalence_after_updates(WI):
    # integer weights keep the running total exact through every update
    rng = np.random.default_rng(5)
    w = rng.integers(0, 50, size=257).astype(float)
    w[0] = 1.0
    ix = WI(w)
    for _ in range(3000):
        i = int(rng.integers(len(w)))
        w[i] = float(rng.integers(0, 50))
        ix.update(i, w[i])
        if not w.any():
            continue
        assert ix.total == w.sum()
        u = float(rng.random())
        assert ix.sample(u) == oracle_sample(w, u)


@settings(max_examples=300, deadline=None)
@given(
    weights=st.lists(st.integers(0, 1000), min_size=1, max_size=64).filter(any),
    u=st.floats(0.0, 1.0, exclude_max=True),
)
def test_oracle_equivalence_exact_sums(weights, u):
    # small dyadic weights: every prefix sum is exact, so agreement is unconditional
    ws = [x / 8 for x in weights]
    for WI, _ in IMPLS.values():
        assert WI(ws).sample(u) == oracle_sample(ws, u)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 50), j=st.integers(0, 49), u=st.floats(0.0, 1.0, exclude_max=True),
       w=st.floats(1e-300, 1e300))
def test_single_support(n, j, u, w):
    j = j % n
    ws = [0.0] * n
    ws[j] = w
    assert oracle_sample(ws, u) == j
    for WI, _ in IMPLS.values():
        assert WI(ws).sample(u) == j


def test_proportionality_within_4_sigma(WI):
    w = np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 10], dtype=float)
    p = w / w.sum()
    n_draws = 10**6
    us = np.random.default_rng(2024).random(n_draws)
    idx = WI(w).sample_many(us)
    freq = np.bincount(idx, minlength=10)
    sd = np.sqrt(n_draws * p * (1 - p))
    assert np.all(np.abs(freq - n_draws * p) <= 4 * sd)


def test_drift_after_many_updates(WI):
    rng = np.random.default_rng(3)
    n = 6430
    w = rng.exponential(size=n) * 30
    ix = WI(w)
    for _ in range(10**5):
        i = int(rng.integers(n))
        w[i] = w[i] + 1.0 if rng.random() < 0.9 else rng.exponential()
        ix.update(i, w[i])
    exact = np.sum(w)
    assert abs(ix.total - exact) / exact <= 1e-9
    assert np.array_equal(ix.weights, w)


def test_rebuild_cadence(WI):
    ix = WI([0.1] * 10, rebuild_every=7)
    for k in range(100):
        ix.update(k % 10, 0.1 * (k + 1))
    weights = [0.1 * (k + 1) for k in range(90, 100)]
    exact = sum(weights)
    assert abs(ix.total - exact) / exact < 1e-12
    with pytest.raises(ParameterError):
        WI([1.0], rebuild_every=0)


def test_prefix_sums(WI):
    ix = WI([1, 2, 3, 4, 5])
    assert [ix.prefix_sum(i) for i in range(5)] == [1, 3, 6, 10, 15]
    ix.update(2, 0)
    assert ix.prefix_sum(4) == 12


def test_backends_agree_on_sample_many():
    rng = np.random.default_rng(8)
    w = rng.exponential(size=1000)
    us = rng.random(5000)
    outs = [WI(w).sample_many(us) for WI, _ in IMPLS.values()]
    for o in outs[1:]:
        assert np.array_equal(outs[0], o)


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    code = "import citesim._backend as b; print(b.BACKEND, b.WeightIndex.backend)"
    env = dict(os.environ, CITESIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "python"]
