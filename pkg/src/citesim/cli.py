"""``citesim`` command line: gen-teams, simulate, analyze, compare, fit.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 analysis undefined.
"""
from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import _backend
from .engine import SimulationConfig, default_checkpoints, expected_direct_count, run_ensemble, yearly_checkpoints
from .errors import CitesimError, ParameterError
from .fit import DEFAULT_MAX_POINTS, ParamGrid, grid_fit
from .kernels import KernelSpec, cohort_direct_weights, normalize_mode
from .population import TeamGenParams, gen_team_sizes, read_team_csv, team_csv_text, team_size_histogram
from .stats import (
    BinningScheme,
    citation_histogram,
    direct_fraction_by_final_count,
    direct_share_by_period,
    distance,
    distribution_csv_text,
    fraction_csv_text,
    geometric_mean_by_team_size,
    gm_csv_text,
    log_binned,
    merge_histograms,
    modal_value,
    read_distribution_csv,
    share_csv_text,
)

CONFIG_KEYS = ("simulation", "kernel", "binning", "team_gen", "teams", "workers")


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def dump_json(obj, compact: bool = False) -> str:
    if compact:
        return json.dumps(obj, separators=(",", ":")) + "\n"
    return json.dumps(obj, indent=2) + "\n"


@dataclass
class CliConfig:
    simulation: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    binning: dict = field(default_factory=dict)
    team_gen: dict = field(default_factory=dict)
    teams: str | None = None
    workers: int = 1

    @classmethod
    def load(cls, path) -> "CliConfig":
        if path is None:
            return cls()
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ParameterError(f"{path}: config must be a JSON object")
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise ParameterError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg = cls(**raw)
        # validate every section up front, before any work starts
        if cfg.simulation:
            SimulationConfig.from_dict(cfg.simulation)
        if cfg.kernel:
            KernelSpec.from_dict(cfg.kernel)
        BinningScheme.from_dict(cfg.binning)
        TeamGenParams.from_dict(cfg.team_gen)
        if not isinstance(cfg.workers, int) or cfg.workers < 1:
            raise ParameterError("workers must be a positive integer")
        return cfg


def _kernel_from(cfg: CliConfig, kernel, alpha, epsilon, beta, gamma, c, cap, transform_kind,
                 attract_exponent) -> KernelSpec:
    kd = dict(cfg.kernel)
    if kernel is not None:
        kd["mode"] = normalize_mode(kernel)
    kd.setdefault("mode", "team")
    mode = normalize_mode(kd["mode"])
    for name, val in (("alpha", alpha), ("epsilon", epsilon), ("beta", beta), ("attract_exponent", attract_exponent)):
        if val is not None:
            kd[name] = val
    td = dict(kd.get("transform") or {})
    if not td and mode == "team_general":
        td = {"kind": "power", "c": 1.0, "gamma": 0.3}
    for name, val in (("gamma", gamma), ("c", c), ("cap", cap)):
        if val is not None:
            td[name] = val
    if transform_kind is not None:
        td["kind"] = transform_kind
    elif (gamma is not None or c is not None) and td.get("kind", "identity") == "identity":
        td["kind"] = "power"
    if td:
        kd["transform"] = td
    return KernelSpec.from_dict(kd)


def _binning_from(cfg: CliConfig, integer_bins_up_to, log_width) -> BinningScheme:
    bd = dict(cfg.binning)
    if integer_bins_up_to is not None:
        bd["integer_bins_up_to"] = integer_bins_up_to
    if log_width is not None:
        bd["log_width"] = log_width
    return BinningScheme.from_dict(bd)


def _parse_checkpoint(spec: str) -> tuple[str, int]:
    label, sep, ev = spec.partition("=")
    try:
        if not sep or not label.strip():
            raise ValueError
        return label.strip(), int(ev)
    except ValueError:
        raise ParameterError(f"malformed checkpoint {spec!r}; expected label=events") from None


def _sim_config(cfg: CliConfig, n_papers, events, replicates, seed, checkpoints, yearly) -> SimulationConfig:
    sd = dict(cfg.simulation)
    for name, val in (("n_papers", n_papers), ("total_events", events), ("replicates", replicates), ("seed", seed)):
        if val is not None:
            sd[name] = val
    total = int(sd.get("total_events", SimulationConfig.total_events))
    if checkpoints:
        sd["checkpoints"] = [_parse_checkpoint(s) for s in checkpoints]
    elif yearly:
        sd["checkpoints"] = [cp for cp in yearly_checkpoints() if cp[1] <= total]
    elif "checkpoints" not in sd:
        sd["checkpoints"] = default_checkpoints(total)
    return SimulationConfig.from_dict(sd)


def _load_teams(cfg: CliConfig, teams_path, n_papers, seed):
    path = teams_path or cfg.teams
    if path is not None:
        return read_team_csv(path)
    params = TeamGenParams.from_dict(cfg.team_gen)
    return gen_team_sizes(params, n_papers, seed)


def common_options(f):
    f = click.option("--out", "out", type=click.Path(), default=None, help="Output path.")(f)
    f = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Unsigned 64-bit seed.")(f)
    f = click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file.")(f)
    return f


def kernel_options(f):
    opts = [
        click.option("--kernel", default=None, help="Kernel mode, e.g. price, gen-price, team, team-general."),
        click.option("--alpha", type=float, default=None),
        click.option("--epsilon", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--gamma", type=float, default=None),
        click.option("--c", "c", type=float, default=None),
        click.option("--cap", type=int, default=None),
        click.option("--transform-kind", type=click.Choice(["identity", "power", "constant"]), default=None),
        click.option("--attract-exponent", type=float, default=None),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def sim_options(f):
    opts = [
        click.option("--teams", "teams_path", type=click.Path(), default=None, help="Team CSV (paper_id,team_size)."),
        click.option("--n-papers", type=int, default=None),
        click.option("--events", type=int, default=None, help="Total citation events."),
        click.option("--replicates", type=int, default=None),
        click.option("--workers", type=int, default=None),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def binning_options(f):
    f = click.option("--log-width", type=float, default=None, help="Log-bin width in decades.")(f)
    f = click.option("--integer-bins-up-to", type=int, default=None)(f)
    return f


@click.group()
def cli():
    """Simulate citation accumulation under direct + cumulative-advantage kernels."""


@cli.command("gen-teams")
@common_options
@click.option("--n", "n", type=int, default=6430, show_default=True, help="Cohort size.")
@click.option("--core-mean", type=float, default=None)
@click.option("--tail-exponent", type=float, default=None)
@click.option("--tail-fraction", type=float, default=None)
@click.option("--max-size", type=int, default=None)
def gen_teams_cmd(config_path, seed, out, n, core_mean, tail_exponent, tail_fraction, max_size):
    """Write a synthetic team-size cohort as CSV."""
    cfg = CliConfig.load(config_path)
    if out is None:
        raise ParameterError("--out is required")
    gd = dict(cfg.team_gen)
    for name, val in (("core_mean", core_mean), ("tail_exponent", tail_exponent),
                      ("tail_fraction", tail_fraction), ("max_size", max_size)):
        if val is not None:
            gd[name] = val
    params = TeamGenParams.from_dict(gd)
    sizes = gen_team_sizes(params, n, 0 if seed is None else seed)
    write_atomic(out, team_csv_text(sizes))
    hist = team_size_histogram(sizes)
    click.echo(f"n={len(sizes)} mode={modal_value(hist)} max={int(sizes.max())} -> {out}")


@cli.command("simulate")
@common_options
@kernel_options
@sim_options
@click.option("--checkpoint", "checkpoints", multiple=True, help="label=events; repeatable.")
@click.option("--yearly", is_flag=True, help="Yearly checkpoints interpolated between the pinned counts.")
def simulate_cmd(config_path, seed, out, kernel, alpha, epsilon, beta, gamma, c, cap, transform_kind,
                 attract_exponent, teams_path, n_papers, events, replicates, workers, checkpoints, yearly):
    """Run a replicate ensemble and write one JSON per replicate plus a summary."""
    cfg = CliConfig.load(config_path)
    if out is None:
        raise ParameterError("--out (output directory) is required")
    k = _kernel_from(cfg, kernel, alpha, epsilon, beta, gamma, c, cap, transform_kind, attract_exponent)
    teams = None
    if teams_path or cfg.teams:
        teams = _load_teams(cfg, teams_path, None, None)
        if n_papers is None and "n_papers" not in cfg.simulation:
            n_papers = len(teams)
    sim = _sim_config(cfg, n_papers, events, replicates, seed, checkpoints, yearly)
    if teams is None:
        teams = _load_teams(cfg, None, sim.n_papers, sim.seed)
    runs = run_ensemble(sim, teams, k, workers=workers or cfg.workers)

    out = Path(out)
    files = {}
    rows = []
    for r in runs:
        name = f"run_{r.replicate:03d}.json"
        files[name] = dump_json(r.to_dict(), compact=True)
        fin = r.final
        hist = citation_histogram(fin)
        rows.append({
            "replicate": r.replicate,
            "file": name,
            "events": int(fin.n_cit.sum()),
            "direct": r.total_direct,
            "uncited": int((fin.n_cit == 0).sum()),
            "max": int(fin.n_cit.max()),
            "modal_count": modal_value(hist),
        })
    pooled = merge_histograms(citation_histogram(r.final) for r in runs)
    summary = {
        "kernel": k.to_dict(),
        "simulation": sim.to_dict(),
        "replicates": rows,
        "ensemble": {
            "mean_direct": float(np.mean([row["direct"] for row in rows])),
            "pooled_modal_count": modal_value(pooled),
        },
    }
    if k.static_direct and k.mode != "powerlaw_attract" and sim.total_events > 0:
        A = math.fsum(cohort_direct_weights(k, teams))
        summary["ensemble"]["expected_direct"] = expected_direct_count(A, sim.total_events)
    files["summary.json"] = dump_json(summary)
    for name, text in files.items():
        write_atomic(out / name, text)
    click.echo(
        f"{len(runs)} replicate(s) of {k.mode}, {sim.n_papers} papers, {sim.total_events} events "
        f"[{_backend.BACKEND} core] -> {out}"
    )


@cli.command("analyze")
@common_options
@binning_options
@click.argument("run_json", type=click.Path())
@click.option("--checkpoint", "labels", multiple=True, help="Checkpoint label(s); default: the final one.")
@click.option("--unshifted-gm", is_flag=True, help="Plain geometric mean over cited papers only.")
def analyze_cmd(config_path, seed, out, integer_bins_up_to, log_width, run_json, labels, unshifted_gm):
    """Write distribution, direct-share, direct-fraction and GM CSVs for a run."""
    from .engine import RunResult

    cfg = CliConfig.load(config_path)
    if out is None:
        raise ParameterError("--out (output directory) is required")
    scheme = _binning_from(cfg, integer_bins_up_to, log_width)
    try:
        rr = RunResult.from_dict(json.loads(Path(run_json).read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParameterError(f"{run_json}: not a run result: {exc}") from None
    if not labels:
        labels = (rr.final.label,)
    files = {"shares.csv": share_csv_text(direct_share_by_period(rr))}
    for label in labels:
        try:
            snap = rr.snapshot(label)
        except KeyError as exc:
            raise ParameterError(str(exc.args[0])) from None
        files[f"distribution_{label}.csv"] = distribution_csv_text(log_binned(citation_histogram(snap), scheme))
        files[f"direct_fraction_{label}.csv"] = fraction_csv_text(direct_fraction_by_final_count(snap, scheme))
        files[f"gm_{label}.csv"] = gm_csv_text(
            geometric_mean_by_team_size(snap, rr.team_sizes, scheme, shifted=not unshifted_gm)
        )
    out = Path(out)
    for name, text in files.items():
        write_atomic(out / name, text)
    click.echo(f"wrote {len(files)} file(s) for checkpoint(s) {', '.join(labels)} -> {out}")


@cli.command("compare")
@common_options
@click.argument("a_csv", type=click.Path())
@click.argument("b_csv", type=click.Path())
def compare_cmd(config_path, seed, out, a_csv, b_csv):
    """Distance in decades between two distribution CSVs."""
    a = read_distribution_csv(a_csv)
    b = read_distribution_csv(b_csv)
    d = distance(a, b)
    click.echo(f"distance_decades={d.decades!r} common_bins={d.n_common} excluded_bins={d.n_excluded}")
    if out is not None:
        write_atomic(out, dump_json({"a": str(a_csv), "b": str(b_csv), "distance_decades": d.decades,
                                     "common_bins": d.n_common, "excluded_bins": d.n_excluded}))


@cli.command("fit")
@common_options
@kernel_options
@sim_options
@binning_options
@click.option("--target", type=click.Path(), required=True, help="Target distribution CSV.")
@click.option("--grid", "grid_specs", multiple=True, required=True, help="name=lo:hi:step; repeatable.")
@click.option("--max-points", type=int, default=DEFAULT_MAX_POINTS, show_default=True)
def fit_cmd(config_path, seed, out, kernel, alpha, epsilon, beta, gamma, c, cap, transform_kind,
            attract_exponent, teams_path, n_papers, events, replicates, workers, integer_bins_up_to,
            log_width, target, grid_specs, max_points):
    """Grid-search kernel parameters against a target distribution."""
    cfg = CliConfig.load(config_path)
    if out is None:
        raise ParameterError("--out (report path) is required")
    grid = ParamGrid.parse(grid_specs, max_points)
    k = _kernel_from(cfg, kernel, alpha, epsilon, beta, gamma, c, cap, transform_kind, attract_exponent)
    scheme = _binning_from(cfg, integer_bins_up_to, log_width)
    teams = None
    if teams_path or cfg.teams:
        teams = _load_teams(cfg, teams_path, None, None)
        if n_papers is None and "n_papers" not in cfg.simulation:
            n_papers = len(teams)
    sim = _sim_config(cfg, n_papers, events, replicates, seed, (), False)
    sim = SimulationConfig(sim.n_papers, sim.total_events, (), sim.seed, sim.replicates)
    if teams is None:
        teams = _load_teams(cfg, None, sim.n_papers, sim.seed)
    tgt = read_distribution_csv(target)
    result = grid_fit(grid, k, tgt, sim, teams, scheme, workers=workers or cfg.workers)
    report = {
        "kernel": k.to_dict(),
        "simulation": sim.to_dict(),
        "binning": scheme.to_dict(),
        "target": str(target),
        "grid": grid.to_dict(),
        **result.to_dict(),
    }
    write_atomic(out, dump_json(report))
    params = " ".join(f"{n}={v}" for n, v in result.best_params.items())
    click.echo(f"best {params} objective={result.best_objective:.4f} decades ({len(result.surface)} points) -> {out}")


def main(argv=None) -> int:
    """Console entry point; maps errors to the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="citesim", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except CitesimError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
