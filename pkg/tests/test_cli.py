import json

import numpy as np
import pytest

from citesim.cli import main
from citesim.population import read_team_csv


def rc(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert rc("gen-teams", "--n", 6430, "--seed", 7, "--out", d / "teams.csv") == 0
    assert rc("simulate", "--teams", d / "teams.csv", "--kernel", "team", "--seed", 3, "--out", d / "team") == 0
    return d


def test_gen_teams(workdir, capsys, tmp_path):
    sizes = read_team_csv(workdir / "teams.csv")
    assert len(sizes) == 6430
    assert rc("gen-teams", "--n", 6430, "--seed", 7, "--out", tmp_path / "again.csv") == 0
    assert (tmp_path / "again.csv").read_bytes() == (workdir / "teams.csv").read_bytes()
    out = capsys.readouterr().out
    assert "n=6430" in out and "mode=" in out and "max=" in out


def test_gen_teams_validation(tmp_path, capsys):
    assert rc("gen-teams", "--n", 0, "--out", tmp_path / "t.csv") == 1
    assert not (tmp_path / "t.csv").exists()
    assert "error" in capsys.readouterr().err


def test_simulate_defaults(workdir):
    run = json.loads((workdir / "team" / "run_000.json").read_text())
    assert sum(run["snapshots"][-1]["n_cit"]) == 263371
    assert [s["label"] for s in run["snapshots"]] == ["initial", "final"]
    assert sum(run["snapshots"][0]["n_cit"]) == 38414
    summary = json.loads((workdir / "team" / "summary.json").read_text())
    assert summary["simulation"]["replicates"] == 1


def test_simulate_byte_identical(workdir, tmp_path):
    assert rc("simulate", "--teams", workdir / "teams.csv", "--kernel", "team", "--seed", 3, "--out", tmp_path) == 0
    for name in ("run_000.json", "summary.json"):
        assert (tmp_path / name).read_bytes() == (workdir / "team" / name).read_bytes()


def test_simulate_zero_events(tmp_path):
    assert rc("simulate", "--kernel", "price", "--n-papers", 20, "--events", 0, "--out", tmp_path) == 0
    run = json.loads((tmp_path / "run_000.json").read_text())
    assert run["snapshots"][-1]["n_cit"] == [0] * 20


def test_alpha_shifts_modal_bin(workdir, tmp_path):
    from citesim.engine import RunResult
    from citesim.stats import citation_histogram, log_binned, merge_histograms

    modes = {}
    for name, extra in (("p", ["--kernel", "price"]), ("g", ["--kernel", "gen-price", "--alpha", 1.5])):
        assert rc("simulate", "--teams", workdir / "teams.csv", "--replicates", 20, "--seed", 4,
                  "--out", tmp_path / name, *extra) == 0
        runs = [RunResult.from_dict(json.loads(p.read_text())) for p in sorted((tmp_path / name).glob("run_*.json"))]
        bd = log_binned(merge_histograms(citation_histogram(r.final) for r in runs))
        modes[name] = bd.modal_bin().center
    assert modes["g"] >= modes["p"]


def test_config_file(tmp_path, workdir):
    cfg = {"simulation": {"n_papers": 50, "total_events": 500, "checkpoints": [["half", 250]]},
           "kernel": {"mode": "gen_price", "alpha": 2.0}, "team_gen": {"core_mean": 3.0}}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert rc("simulate", "--config", tmp_path / "c.json", "--seed", 1, "--out", tmp_path / "o") == 0
    run = json.loads((tmp_path / "o" / "run_000.json").read_text())
    assert run["meta"]["kernel"]["mode"] == "gen_price" and run["meta"]["kernel"]["alpha"] == 2.0
    assert len(run["team_sizes"]) == 50
    assert [s["label"] for s in run["snapshots"]] == ["half", "final"]
    (tmp_path / "bad.json").write_text(json.dumps({"kernal": {}}))
    assert rc("simulate", "--config", tmp_path / "bad.json", "--out", tmp_path / "o2") == 1
    (tmp_path / "bad2.json").write_text(json.dumps({"kernel": {"mode": "price", "alpha": -1}}))
    assert rc("simulate", "--config", tmp_path / "bad2.json", "--out", tmp_path / "o3") == 1
    assert not (tmp_path / "o3").exists()


def test_analyze(workdir, tmp_path):
    out = tmp_path / "an"
    run = workdir / "team" / "run_000.json"
    assert rc("analyze", run, "--checkpoint", "initial", "--checkpoint", "final", "--out", out) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["direct_fraction_final.csv", "direct_fraction_initial.csv", "distribution_final.csv",
                     "distribution_initial.csv", "gm_final.csv", "gm_initial.csv", "shares.csv"]
    lines = (out / "distribution_initial.csv").read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,bin_center,count,density"
    rows = [list(map(float, l.split(","))) for l in lines[1:]]
    modal = max(rows, key=lambda r: r[4])
    assert modal[2] <= 10
    assert (out / "gm_final.csv").read_text().startswith("team_lo,team_hi,n_papers,gm\n")
    out2 = tmp_path / "an2"
    assert rc("analyze", run, "--checkpoint", "initial", "--checkpoint", "final", "--out", out2) == 0
    for p in out.iterdir():
        assert (out2 / p.name).read_bytes() == p.read_bytes()


def test_analyze_uniform_shares(tmp_path):
    assert rc("simulate", "--kernel", "uniform", "--n-papers", 100, "--events", 5000, "--checkpoint", "a=1000",
              "--out", tmp_path / "u") == 0
    assert rc("analyze", tmp_path / "u" / "run_000.json", "--out", tmp_path / "a") == 0
    rows = (tmp_path / "a" / "shares.csv").read_text().splitlines()[1:]
    assert rows and all(r.split(",")[-1] == "1" for r in rows)


def test_analyze_errors(workdir, tmp_path, capsys):
    assert rc("analyze", workdir / "team" / "run_000.json", "--checkpoint", "2012", "--out", tmp_path) == 1
    assert "initial, final" in capsys.readouterr().err
    assert rc("analyze", tmp_path / "missing.json", "--out", tmp_path) == 2


def test_compare(workdir, tmp_path, capsys):
    assert rc("simulate", "--teams", workdir / "teams.csv", "--kernel", "price", "--seed", 3, "--out", tmp_path / "p") == 0
    assert rc("analyze", tmp_path / "p" / "run_000.json", "--out", tmp_path / "pa") == 0
    assert rc("analyze", workdir / "team" / "run_000.json", "--out", tmp_path / "ta") == 0
    capsys.readouterr()
    a, b = tmp_path / "pa" / "distribution_final.csv", tmp_path / "ta" / "distribution_final.csv"
    assert rc("compare", a, a) == 0
    assert "distance_decades=0.0 " in capsys.readouterr().out
    assert rc("compare", a, b, "--out", tmp_path / "cmp.json") == 0
    report = json.loads((tmp_path / "cmp.json").read_text())
    assert report["distance_decades"] > 0 and "excluded_bins" in report


def test_compare_errors(tmp_path):
    head = "bin_lo,bin_hi,bin_center,count,density\n"
    (tmp_path / "a.csv").write_text(head + "0.5,1.5,1,5,1\n")
    (tmp_path / "b.csv").write_text(head + "1.5,2.5,2,5,1\n")
    (tmp_path / "c.csv").write_text(head + "0.5,2.5,1.5,5,0.5\n")
    assert rc("compare", tmp_path / "a.csv", tmp_path / "b.csv") == 3
    assert rc("compare", tmp_path / "a.csv", tmp_path / "c.csv") == 1
    assert rc("compare", tmp_path / "a.csv", tmp_path / "nope.csv") == 2


def test_fit(workdir, tmp_path):
    assert rc("simulate", "--kernel", "gen-price", "--alpha", 1.5, "--n-papers", 300, "--events", 6000,
              "--replicates", 4, "--seed", 8, "--out", tmp_path / "t") == 0
    assert rc("analyze", tmp_path / "t" / "run_000.json", "--out", tmp_path / "ta") == 0
    target = tmp_path / "ta" / "distribution_final.csv"
    args = ["fit", "--target", target, "--kernel", "gen-price", "--n-papers", 300, "--events", 6000,
            "--replicates", 2, "--seed", 1]
    assert rc(*args, "--grid", "alpha=1.5", "--out", tmp_path / "f1.json") == 0
    rep = json.loads((tmp_path / "f1.json").read_text())
    assert rep["best_params"] == {"alpha": 1.5} and len(rep["surface"]) == 1
    assert rep["grid"] == [{"name": "alpha", "lo": 1.5, "hi": 1.5, "step": 1.0}]
    assert rc(*args, "--grid", "alpha=1.0:2.0:0.5", "--out", tmp_path / "f2.json") == 0
    assert rc(*args, "--grid", "alpha=1.0:2.0:0.5", "--out", tmp_path / "f3.json") == 0
    assert (tmp_path / "f2.json").read_bytes() == (tmp_path / "f3.json").read_bytes()
    assert rc(*args, "--grid", "alpha=1.0:x", "--out", tmp_path / "bad.json") == 1
    assert rc(*args, "--grid", "alpha=0:10:0.001", "--max-points", 100, "--out", tmp_path / "bad.json") == 1
    assert not (tmp_path / "bad.json").exists()


def test_usage_errors(capsys):
    assert rc("simulate", "--bogus") == 1
    assert rc("simulate", "--seed", -1) == 1
    assert rc("nonsense") == 1
    assert rc("--help") == 0
