"""Batch front end: the four swarm experiments plus the PDE-level verifier.

Each command reads one JSON config, runs the relevant scenario(s), and writes
a self-contained output directory: config echo, metrics CSVs, snapshot CSVs
and a JSON summary.  Exit code 0 means the run completed without divergence
or validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .circle import Field, Grid
from .config import ConfigError, ScenarioConfig, TopologyConfig, config_to_dict, load_config
from .control import ControlGains, fit_decay_rate, simulate_macroscopic
from .kernels import InteractionParams, TargetParams, target_density
from .sim import RunRecord, run_scenario


@dataclass(frozen=True)
class OutputBundle:
    """Where a command wrote its artifacts, plus the parsed summary."""

    root: Path
    summary: dict


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_metrics(record: RunRecord, path: Path):
    header = ["time", "density_error_raw", "density_error_normalized"]
    have_est = record.estimation_error is not None
    if have_est:
        header += ["estimation_error_raw_mean", "estimation_error_normalized"]
    if record.tracking_mu is not None:
        header += ["tracking_mu"]
    rows = []
    for i, t in enumerate(record.times):
        row = [f"{t:.6f}", f"{record.density_error.raw[i]:.10g}",
               f"{record.density_error.normalized[i]:.10g}"]
        if have_est:
            row += [f"{record.estimation_error.raw[i]:.10g}",
                    f"{record.estimation_error.normalized[i]:.10g}"]
        if record.tracking_mu is not None:
            row += [f"{record.tracking_mu[i]:.10g}"]
        rows.append(row)
    _write_csv(path, header, rows)


def _write_connectivity(record: RunRecord, path: Path):
    rows = [[f"{t:.6f}", int(c)] for t, c in
            zip(record.step_times, record.connected_flags)]
    _write_csv(path, ["step_time", "connected"], rows)


def _write_snapshots(record: RunRecord, path: Path):
    grid = Grid(record.config.grid_m)
    header = ["snapshot_time", "node", "x", "density", "target"]
    have_est = record.estimate_mean_snapshots is not None
    if have_est:
        header.append("estimate_mean")
    rows = []
    for s, t in enumerate(record.snapshot_times):
        for k in range(grid.m):
            row = [f"{t:.6f}", k, f"{grid.points[k]:.10g}",
                   f"{record.density_snapshots[s, k]:.10g}",
                   f"{record.target_snapshots[s, k]:.10g}"]
            if have_est:
                row.append(f"{record.estimate_mean_snapshots[s, k]:.10g}")
            rows.append(row)
    _write_csv(path, header, rows)


def _write_positions(record: RunRecord, path: Path):
    n = record.config.n
    header = ["time"] + [f"x_{i}" for i in range(n)]
    rows = [[f"{t:.6f}"] + [f"{x:.10g}" for x in record.positions[i]]
            for i, t in enumerate(record.times)]
    _write_csv(path, header, rows)


def _dump_run(record: RunRecord, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    _write_metrics(record, outdir / "metrics.csv")
    _write_connectivity(record, outdir / "connectivity.csv")
    _write_snapshots(record, outdir / "snapshots.csv")
    _write_positions(record, outdir / "positions.csv")
    norm = record.density_error.normalized
    return {
        "samples": int(record.times.size),
        "final_time": float(record.times[-1]) if record.times.size else 0.0,
        "final_density_error_raw": float(record.density_error.raw[-1]) if record.times.size else None,
        "final_density_error_normalized": float(norm[-1]) if record.times.size else None,
        "disconnected_steps": record.disconnected_steps,
        "total_steps": int(record.step_times.size),
    }


def _echo_config(cfg: ScenarioConfig, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config_echo.json").write_text(
        json.dumps(config_to_dict(cfg), indent=2) + "\n")


def _write_summary(summary: dict, outdir: Path):
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def _steady_state(record: RunRecord, tail_fraction: float = 0.2):
    """Mean normalized density error over the trailing window of the run."""
    times, norm = record.times, record.density_error.normalized
    if times.size == 0:
        return None, None
    t_cut = times[-1] - tail_fraction * (times[-1] - times[0])
    tail = norm[times >= t_cut]
    return float(tail.mean()), float(t_cut)


def _time_to_half(record: RunRecord):
    raw = record.density_error.raw
    if raw.size == 0 or raw[0] <= 0:
        return None
    below = np.flatnonzero(raw <= 0.5 * raw[0])
    if below.size == 0:
        return None
    return float(record.times[below[0]])


def cmd_regulate(config_path, out_dir, parallel: bool = False) -> OutputBundle:
    """Centralized and decentralized regulation with identical parameters."""
    cfg = load_config(config_path)
    out = Path(out_dir)
    _echo_config(cfg, out)
    summary = {"command": "regulate", "modes": {}}
    records = {}
    for mode in ("decentralized", "centralized"):
        rec = run_scenario(replace(cfg, mode=mode))
        records[mode] = rec
        summary["modes"][mode] = _dump_run(rec, out / mode)

    dec, cen = records["decentralized"], records["centralized"]
    if dec.times.size:
        early = dec.times <= 0.5 + 1e-12
        gap = dec.density_error.normalized[early] - cen.density_error.normalized[early]
        summary["early_window"] = {
            "t_max": 0.5,
            "recorded_times": int(early.sum()),
            "max_gap_dec_minus_cent": float(gap.max()),
            "dec_le_cent_at_all_recorded": bool((gap <= 0).all()),
        }
        fd = dec.density_error.normalized[-1]
        fc = cen.density_error.normalized[-1]
        summary["settle"] = {
            "time": float(dec.times[-1]),
            "decentralized": float(fd),
            "centralized": float(fc),
            "relative_gap": float(abs(fd - fc) / max(fd, fc)) if max(fd, fc) > 0 else 0.0,
        }
    _write_summary(summary, out)
    return OutputBundle(out, summary)


def cmd_track(config_path, out_dir, parallel: bool = False) -> OutputBundle:
    """Tracking of the moving-mean target, both modes."""
    cfg = load_config(config_path)
    if cfg.target.kind != "tracking-von-mises":
        raise ConfigError("target.kind: cmd track requires a tracking-von-mises target")
    out = Path(out_dir)
    _echo_config(cfg, out)
    summary = {"command": "track", "modes": {}}
    for mode in ("decentralized", "centralized"):
        rec = run_scenario(replace(cfg, mode=mode))
        info = _dump_run(rec, out / mode)
        norm = rec.density_error.normalized
        info["max_normalized_error"] = float(norm.max()) if norm.size else None
        info["max_after_initial"] = float(norm[1:].max()) if norm.size > 1 else None
        summary["modes"][mode] = info
    _write_summary(summary, out)
    return OutputBundle(out, summary)


def cmd_proximity(config_path, out_dir, parallel: bool = False) -> OutputBundle:
    """Decentralized regulation over the switching proximity network."""
    cfg = load_config(config_path)
    if cfg.topology.kind != "proximity":
        raise ConfigError("topology.kind: cmd proximity requires a proximity topology")
    cfg = replace(cfg, mode="decentralized")
    out = Path(out_dir)
    _echo_config(cfg, out)
    rec = run_scenario(cfg)
    summary = {"command": "proximity"}
    summary["run"] = _dump_run(rec, out / "decentralized")
    steady, t_cut = _steady_state(rec)
    total = max(int(rec.step_times.size), 1)
    summary["steady_state_normalized_error"] = steady
    summary["steady_state_window_start"] = t_cut
    summary["disconnected_steps"] = rec.disconnected_steps
    summary["disconnected_fraction"] = rec.disconnected_steps / total
    _write_summary(summary, out)
    return OutputBundle(out, summary)


def _sweep_member(args):
    cfg, k, outdir = args
    member = replace(cfg, mode="decentralized",
                     topology=TopologyConfig(kind="knn", k=k))
    rec = run_scenario(member)
    info = _dump_run(rec, Path(outdir))
    info["k"] = k
    info["time_to_half_raw_error"] = _time_to_half(rec)
    return k, info


def cmd_nn_sweep(config_path, out_dir, parallel: bool = False) -> OutputBundle:
    """Regulation runs across neighbor counts; reports time-to-half error."""
    cfg = load_config(config_path)
    if not cfg.sweep_ks:
        raise ConfigError("sweep_ks: must list at least one k")
    out = Path(out_dir)
    _echo_config(cfg, out)
    jobs = [(cfg, k, str(out / f"k{k:02d}")) for k in cfg.sweep_ks]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), 4)) as pool:
            results = dict(pool.map(_sweep_member, jobs))
    else:
        results = dict(map(_sweep_member, jobs))
    summary = {"command": "nn-sweep", "members": {}}
    halves = []
    for k in cfg.sweep_ks:
        summary["members"][str(k)] = results[k]
        halves.append(results[k]["time_to_half_raw_error"])
    summary["time_to_half"] = {str(k): h for k, h in zip(cfg.sweep_ks, halves)}
    known = [h for h in halves if h is not None]
    summary["non_increasing"] = bool(
        all(h is not None for h in halves)
        and all(a >= b for a, b in zip(known, known[1:])))
    _write_summary(summary, out)
    return OutputBundle(out, summary)


def cmd_macro_verify(config_path, out_dir, parallel: bool = False) -> OutputBundle:
    """Integrate the controlled PDE and fit the error decay rate."""
    cfg = load_config(config_path)
    out = Path(out_dir)
    _echo_config(cfg, out)
    grid = Grid(cfg.grid_m)
    target = target_density(
        TargetParams(cfg.target.kind if cfg.target.kind != "tracking-von-mises"
                     else "monomodal-von-mises",
                     cfg.target.mu1, cfg.target.mu2, cfg.target.kappa, cfg.n), grid)
    rho0 = Field(grid, np.full(grid.m, cfg.n / (2.0 * np.pi)))
    gains = ControlGains(cfg.k_p, cfg.resolved_rho_floor())
    times, errors, masses = simulate_macroscopic(
        rho0, target, gains, InteractionParams(cfg.interaction_length),
        cfg.dt, cfg.t_final)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "decay.csv", ["time", "error_l2", "mass"],
               [[f"{t:.6f}", f"{e:.12g}", f"{m:.12g}"]
                for t, e, m in zip(times, errors, masses)])
    summary = {
        "command": "macro-verify",
        "k_p": cfg.k_p,
        "initial_error": float(errors[0]),
        "final_error": float(errors[-1]),
        "max_error": float(errors.max()),
        "mass_drift": float(np.abs(masses - masses[0]).max()),
    }
    if errors[0] > 1e-8:
        summary["fitted_rate"] = fit_decay_rate(times, errors)
        summary["rate_relative_to_kp"] = summary["fitted_rate"] / cfg.k_p
    _write_summary(summary, out)
    return OutputBundle(out, summary)


COMMANDS = {
    "regulate": cmd_regulate,
    "track": cmd_track,
    "proximity": cmd_proximity,
    "nn-sweep": cmd_nn_sweep,
    "macro-verify": cmd_macro_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ringswarm",
        description="Density-control experiments for agent swarms on the circle")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON scenario config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--parallel", action="store_true",
                       help="run independent sweep members concurrently")
    args = parser.parse_args(argv)
    try:
        bundle = COMMANDS[args.command](args.config, args.out, parallel=args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(bundle.summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
