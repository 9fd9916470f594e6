"""Compare the compiled core against the pure-Python fallback.

    python benchmarks/bench_backends.py [--events N] [--repeat R]

Reports best-of-R wall time for index construction, a sample/update loop and a
full replicate, and checks both backends produce identical final counts.
"""
import argparse
import time

import numpy as np

from citesim._backend import backends
from citesim.engine import SimulationConfig, run
from citesim.kernels import KernelSpec
from citesim.population import TeamGenParams, gen_team_sizes


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_index(WI, weights, us, idx):
    def go():
        ix = WI(weights)
        for u, i in zip(us, idx):
            j = ix.sample(u)
            ix.update(j, weights[i] + 1.0)
    return go


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=263_371)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    teams = gen_team_sizes(TeamGenParams(), 6430, 7)
    weights = np.minimum(teams, 30).astype(float)
    rng = np.random.default_rng(0)
    us = rng.random(50_000).tolist()
    idx = rng.integers(0, len(weights), 50_000).tolist()
    cfg = SimulationConfig(total_events=args.events, checkpoints=())
    k = KernelSpec(mode="team")

    impls = backends()
    rows, finals = [], {}
    for name, (WI, _) in sorted(impls.items()):
        t_build = best_of(lambda: WI(weights), args.repeat)
        t_loop = best_of(bench_index(WI, weights, us, idx), args.repeat)
        t_run = best_of(lambda: finals.__setitem__(name, run(cfg, teams, k, backend=name).final.n_cit),
                        args.repeat)
        rows.append((name, t_build, t_loop, t_run))

    print(f"{'backend':<10}{'build (ms)':>12}{'50k sample+update (ms)':>25}{'replicate (s)':>15}")
    for name, b, l, r in rows:
        print(f"{name:<10}{b * 1e3:>12.2f}{l * 1e3:>25.1f}{r:>15.3f}")
    if len(rows) == 2:
        print(f"speed-up on a full replicate: {rows[1][3] / rows[0][3]:.1f}x")
        same = np.array_equal(finals["compiled"], finals["python"])
        print(f"final counts identical across backends: {same}")
    else:
        print("compiled core not built; only the Python fallback is available")


if __name__ == "__main__":
    main()
