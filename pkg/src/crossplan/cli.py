"""Experiment orchestration: single runs, analytic sweeps, randomized
batches, and CSV emission for the plotting frontend."""
from __future__ import annotations

import argparse
import csv
import math
import multiprocessing
import os
import sys
from dataclasses import replace
from pathlib import Path as FsPath

import numpy as np

from .config import ExperimentConfig, SimConfig
from .metrics import compute_indicators
from .records import RunRecord
from .scenarios import (ScenarioSpec, build_world, following_scenario,
                        intersection_scenario, randomize_scenario)

SWEEP_V_GRID = np.arange(0.0, 15.0 + 1e-9, 0.5)     # other start speeds [m/s]
SWEEP_A_GRID = np.arange(-3.0, 3.0 + 1e-9, 0.5)     # other accelerations [m/s^2]
DEFAULT_BATCH_RUNS = 2000

SWEEP_FIELDS = ["variant", "v_f2", "a_f2", "th_stable", "pet", "v_low1", "v_up1",
                "termination", "collision", "seed", "config_hash"]
BATCH_FIELDS = ["seed", "compliant", "th_2d", "th_2d_reason", "r_max1", "pet",
                "v_low1", "v_up1", "termination", "collision", "config_hash"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.6g}"
    return str(x)


def _write_csv(path, fieldnames, rows):
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})


def _pmap(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(jobs) as pool:
        return pool.map(fn, tasks, chunksize=1)


def _sweep_cfg(cfg: ExperimentConfig, timeout: float) -> ExperimentConfig:
    out = ExperimentConfig.from_dict(cfg.to_dict())
    out.v_max = 20.0
    out.sim = replace(out.sim, timeout=timeout)
    return out


def _following_cell(args):
    variant, v_f2, a_f2, cfg_dict = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    spec = following_scenario(variant, v_f2, a_f2)
    record = build_world(spec, cfg).run()
    ind = compute_indicators(record, with_th2d=False)
    return {"variant": variant, "v_f2": v_f2, "a_f2": a_f2,
            "th_stable": ind.th_stable, "pet": ind.pet,
            "v_low1": ind.v_low1, "v_up1": ind.v_up1,
            "termination": record.termination,
            "collision": int(record.termination == "collision"),
            "seed": "", "config_hash": cfg.content_hash()}


def _intersection_cell(args):
    variant, v_f2, a_f2, cfg_dict = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    spec = intersection_scenario(variant, v_f2, a_f2, cfg)
    record = build_world(spec, cfg).run()
    ind = compute_indicators(record, with_th2d=False)
    return {"variant": variant, "v_f2": v_f2, "a_f2": a_f2,
            "th_stable": ind.th_stable, "pet": ind.pet,
            "v_low1": ind.v_low1, "v_up1": ind.v_up1,
            "termination": record.termination,
            "collision": int(record.termination == "collision"),
            "seed": "", "config_hash": cfg.content_hash()}


def run_sweep(kind: str, variant: str, cfg: ExperimentConfig, out_dir,
              jobs: int = 1, v_grid=SWEEP_V_GRID, a_grid=SWEEP_A_GRID) -> FsPath:
    """Run one analytic sweep over the (v_f2, a_f2) grid; returns the CSV path."""
    out_dir = FsPath(out_dir)
    if kind == "following":
        worker, timeout = _following_cell, 30.0
    else:
        worker, timeout = _intersection_cell, 40.0
    cfg_run = _sweep_cfg(cfg, timeout)
    cfg_dict = cfg_run.to_dict()
    tasks = [(variant, float(v), float(a), cfg_dict) for v in v_grid for a in a_grid]
    rows = _pmap(worker, tasks, jobs)
    rows.sort(key=lambda r: (r["v_f2"], r["a_f2"]))
    csv_path = out_dir / f"sweep_{kind}_{variant}.csv"
    _write_csv(csv_path, SWEEP_FIELDS, rows)
    fails = sum(r["collision"] for r in rows)
    print(f"[sweep-{kind}:{variant}] {len(rows)} cells, {fails} collisions "
          f"-> {csv_path}", file=sys.stderr)
    return csv_path


def _batch_run(args):
    seed, cfg_dict, runs_dir = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    try:
        spec = randomize_scenario(seed, cfg)
        record = build_world(spec, cfg, seed=seed).run()
        record.config_hash = cfg.content_hash()
        ind = compute_indicators(record, with_th2d=True)
        record.indicators = ind.to_dict()
        if runs_dir is not None:
            record.save(FsPath(runs_dir) / f"run_{seed:06d}.json.gz")
        return {"seed": seed, "compliant": int(bool(spec.compliant)),
                "th_2d": ind.th_2d, "th_2d_reason": ind.th_2d_reason,
                "r_max1": ind.r_max1, "pet": ind.pet,
                "v_low1": ind.v_low1, "v_up1": ind.v_up1,
                "termination": record.termination,
                "collision": int(record.termination == "collision"),
                "config_hash": cfg.content_hash()}
    except Exception as exc:  # noqa: BLE001 - a failed run must not kill the batch
        return {"seed": seed, "compliant": "", "th_2d": None,
                "th_2d_reason": f"error:{type(exc).__name__}", "r_max1": None,
                "pet": None, "v_low1": None, "v_up1": None,
                "termination": "error", "collision": 0, "config_hash": ""}


def _cumulative_hist(values, edges):
    values = np.asarray(values, dtype=float)
    return [float(np.mean(values <= e)) if len(values) else 0.0 for e in edges]


def write_batch_histograms(rows, out_dir) -> None:
    """Cumulative TH_2D histogram and log-scale-ready jerk probability
    histogram, split by compliance class."""
    out_dir = FsPath(out_dir)
    classes = {"compliant": [r for r in rows if r["compliant"] == 1],
               "noncompliant": [r for r in rows if r["compliant"] == 0]}

    th_edges = np.arange(0.0, 20.0 + 1e-9, 0.5)
    th_rows = []
    for name, sub in classes.items():
        vals = [min(r["th_2d"], 20.0) if r["th_2d"] is not None else 20.0
                for r in sub if r["termination"] != "error"]
        for edge, frac in zip(th_edges, _cumulative_hist(vals, th_edges)):
            th_rows.append({"class": name, "bin_edge": float(edge),
                            "cum_fraction": frac})
    _write_csv(out_dir / "th2d_cdf.csv", ["class", "bin_edge", "cum_fraction"], th_rows)

    jerk_rows = []
    edges = np.arange(0.0, 14.0 + 1e-9, 0.5)
    for name, sub in classes.items():
        vals = np.asarray([r["r_max1"] for r in sub if r["r_max1"] is not None])
        counts, _ = np.histogram(vals, bins=edges)
        total = max(1, counts.sum())
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            jerk_rows.append({"class": name, "bin_lo": float(lo), "bin_hi": float(hi),
                              "count": int(c), "probability": float(c / total)})
    _write_csv(out_dir / "rmax_hist.csv",
               ["class", "bin_lo", "bin_hi", "count", "probability"], jerk_rows)


def run_batch(cfg: ExperimentConfig, n_runs: int, master_seed: int, out_dir,
              jobs: int = 1, keep_records: bool = True) -> FsPath:
    """Randomized-batch experiment; returns the aggregate CSV path."""
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs_dir = None
    if keep_records:
        runs_dir = out_dir / "runs"
        runs_dir.mkdir(exist_ok=True)
    cfg_run = ExperimentConfig.from_dict(cfg.to_dict())
    cfg_run.v_max = 8.5
    cfg_dict = cfg_run.to_dict()
    seeds = [master_seed + k for k in range(n_runs)]
    rows = _pmap(_batch_run, [(s, cfg_dict, runs_dir) for s in seeds], jobs)
    rows.sort(key=lambda r: r["seed"])
    csv_path = out_dir / "batch.csv"
    _write_csv(csv_path, BATCH_FIELDS, rows)
    write_batch_histograms(rows, out_dir)
    errors = sum(1 for r in rows if r["termination"] == "error")
    collisions = sum(r["collision"] for r in rows)
    print(f"[batch] {len(rows)} runs, {collisions} collisions, {errors} errors "
          f"-> {csv_path}", file=sys.stderr)
    return csv_path


def run_single(cfg: ExperimentConfig, out_dir, scenario_file=None,
               seed: int | None = None) -> RunRecord:
    """One playback run from a scenario file or a randomized seed."""
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if scenario_file is not None:
        spec = ScenarioSpec.load(scenario_file)
    else:
        spec = randomize_scenario(seed if seed is not None else 0, cfg)
    cfg_run = ExperimentConfig.from_dict(cfg.to_dict())
    cfg_run.v_max = spec.v_max
    record = build_world(spec, cfg_run, seed=seed).run()
    record.config_hash = cfg_run.content_hash()
    record.indicators = compute_indicators(record).to_dict()
    path = out_dir / f"run_{record.seed if record.seed is not None else 'scenario'}.json"
    record.save(path)
    print(f"[run] termination={record.termination} -> {path}", file=sys.stderr)
    return record


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossplan",
        description="Priority-aware predictive velocity planning experiments")
    parser.add_argument("--config", help="JSON config file", default=None)
    parser.add_argument("--out", help="output directory "
                        "(default: $CROSSPLAN_OUT_DIR or ./out)", default=None)
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single playback run")
    p_run.add_argument("--scenario", default=None, help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None)

    for kind in ("following", "intersection"):
        p = sub.add_parser(f"sweep-{kind}", help=f"{kind} sweep over (v_f2, a_f2)")
        choices = ("front", "back") if kind == "following" else ("right", "left")
        p.add_argument("--variant", choices=choices, required=True)

    p_batch = sub.add_parser("batch", help="randomized-intersection batch")
    p_batch.add_argument("--runs", type=int, default=DEFAULT_BATCH_RUNS)
    p_batch.add_argument("--seed", type=int, default=0)
    p_batch.add_argument("--no-records", action="store_true",
                         help="skip per-run record files")
    p_batch.add_argument("--max-failures", type=float, default=0.02,
                         help="tolerated fraction of errored runs")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = args.out or os.environ.get("CROSSPLAN_OUT_DIR", "out")
    try:
        cfg = (ExperimentConfig.load(args.config) if args.config
               else ExperimentConfig())
    except (OSError, TypeError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "run":
        run_single(cfg, out_dir, args.scenario, args.seed)
        return 0
    if args.command in ("sweep-following", "sweep-intersection"):
        kind = args.command.split("-", 1)[1]
        run_sweep(kind, args.variant, cfg, out_dir, jobs=args.jobs)
        return 0
    if args.command == "batch":
        csv_path = run_batch(cfg, args.runs, args.seed, out_dir,
                             jobs=args.jobs, keep_records=not args.no_records)
        with open(csv_path) as fh:
            rows = list(csv.DictReader(fh))
        errors = sum(1 for r in rows if r["termination"] == "error")
        if errors > args.max_failures * max(1, len(rows)):
            print(f"too many failed runs: {errors}/{len(rows)}", file=sys.stderr)
            return 2
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
