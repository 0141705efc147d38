"""Command-line interface: ``simulate``, ``filter-offline``, ``calibrate``, ``metrics``.

Exit codes: 0 success, 2 invalid configuration or input, 3 a servo run lost contact.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import csvio
from .config import ConfigError, load_config, run_seed
from .filter import calibrate_model_noise
from .metrics import DegenerateTrajectory, evaluate
from .sim import generate_offline_dataset, run_offline_filter, run_servo
from .svg import write_svg

log = logging.getLogger("tactile_servo")

EXIT_OK, EXIT_INVALID, EXIT_CONTACT_LOST = 0, 2, 3

SUMMARY_COLUMNS = ("mode", "seed_index", "seed", "termination", "steps", "mae", "mse", "s100")


class UsageError(ValueError):
    pass


def _simulate_one(job):
    sim, mode, index, seed, run_dir = job
    traj = run_servo(replace(sim, mode=mode, seed=seed))
    log.info("%s seed %d: %s after %d steps", mode, index, traj.termination, len(traj))
    stem = f"{mode}_seed{index:03d}"
    csv_path = run_dir / f"{stem}.csv"
    json_path = run_dir / f"{stem}.json"
    svg_path = run_dir / f"{stem}.svg"
    csvio.write_trajectory_csv(csv_path, traj)
    pts = traj.points()
    try:
        report = evaluate(pts, sim.shape)
        report_dict = asdict(report)
    except DegenerateTrajectory:
        report_dict = {"mae": None, "mse": None, "s100": None, "n_points": int(pts.shape[0]),
                       "perimeter_est": None, "area_est": None}
    json_path.write_text(json.dumps(report_dict, sort_keys=True) + "\n")
    write_svg(svg_path, pts, sim.shape, title=f"{sim.shape.kind} {stem} ({traj.termination})")
    row = {"mode": mode, "seed_index": index, "seed": seed, "termination": traj.termination,
           "steps": len(traj), "mae": report_dict["mae"], "mse": report_dict["mse"],
           "s100": report_dict["s100"]}
    files = {"trajectory": str(csv_path), "metrics": str(json_path), "svg": str(svg_path)}
    return row, files


def cmd_simulate(args):
    cfg = load_config(args.config)
    out = Path(args.out)
    run_dir = out / "runs"
    run_dir.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(args.config, out / "config.json")
    modes = ("filtered", "unfiltered") if args.mode == "both" else (args.mode,)
    master = cfg.sim.seed
    seeds = [run_seed(master, i) for i in range(args.seeds)]
    jobs = [(cfg.sim, mode, i, s, run_dir) for mode in modes for i, s in enumerate(seeds)]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]

    rows = [r for r, _ in results]
    csvio.write_rows_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    manifest = {
        "config": str(out / "config.json"),
        "master_seed": master,
        "seeds": seeds,
        "output_dir": str(out),
        "runs": [dict(files, mode=r["mode"], seed_index=r["seed_index"]) for r, files in results],
        "summary": rows,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    for mode in modes:
        sel = [r for r in rows if r["mode"] == mode]
        s100 = [r["s100"] for r in sel if r["s100"] is not None]
        mae = [r["mae"] for r in sel if r["mae"] is not None]
        closed = sum(r["termination"] == "closed" for r in sel)
        line = f"{mode}: closed {closed}/{len(sel)}"
        if mae:
            line += f", median MAE {np.median(mae):.4f} mm"
        if s100:
            line += f", median S100 {np.median(s100):.2f} %"
        print(line)
    lost = [r for r in rows if r["termination"] == "contact_lost"]
    if lost:
        print(f"{len(lost)} run(s) lost contact", file=sys.stderr)
        return EXIT_CONTACT_LOST
    return EXIT_OK


def cmd_filter_offline(args):
    if args.generate:
        cfg = load_config(args.generate, require_shape=False)
        seed = cfg.sim.seed if args.seed is None else args.seed
        records = generate_offline_dataset(cfg.sensor, cfg.sweep, seed)
    else:
        cfg = load_config(args.config, require_shape=False) if args.config else None
        records = csvio.read_offline_input(args.input)
    kwargs = {"kf_x": cfg.sim.kf_x, "kf_theta": cfg.sim.kf_theta} if cfg else {}
    series = run_offline_filter(records, **kwargs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.generate:
        csvio.write_offline_input_csv(out / "input.csv", records)
    csvio.write_offline_csv(out / "series.csv", series)
    summary = series.summary()
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name in ("x", "theta"):
        print(f"{name}: MAE unfiltered {summary[f'mae_unfiltered_{name}']:.4f}, "
              f"filtered {summary[f'mae_filtered_{name}']:.4f}, ratio {summary[f'ratio_{name}']:.3f}")
    return EXIT_OK


def parse_sweep(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--sweep: not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise UsageError("--sweep: empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise UsageError("--sweep: values must be strictly ascending")
    if any(v < 0 for v in vals):
        raise UsageError("--sweep: scales must be non-negative")
    return vals


def cmd_calibrate(args):
    sweep = parse_sweep(args.sweep)
    if args.config:
        cfg = load_config(args.config, require_shape=False)
        sensor, truths, seed = cfg.sensor, cfg.sweep.truths(), cfg.sim.seed
    else:
        from .sensor import PoseSensor
        from .sim import SweepSpec

        sensor, truths, seed = PoseSensor(), SweepSpec().truths(), 0
    if args.seed is not None:
        seed = args.seed
    result = calibrate_model_noise(sweep, truths, sensor, seed=seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csvio.write_calibration_csv(out, result)
    print(f"argmin_scale={result.argmin_scale!r}")
    return EXIT_OK


def cmd_metrics(args):
    cfg = load_config(args.config)
    cols = csvio.read_trajectory_csv(args.trajectory)
    pts = np.column_stack([cols["x_mm"], cols["y_mm"]])
    report = evaluate(pts, cfg.sim.shape)
    text = json.dumps(asdict(report), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="tactile-servo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run closed-loop contour following over several seeds")
    s.add_argument("config")
    s.add_argument("--seeds", type=int, default=1)
    s.add_argument("--mode", choices=("filtered", "unfiltered", "both"), default="both")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("filter-offline", help="Kalman-filter an ordered prediction series")
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", help="series CSV (fused or raw batch columns)")
    src.add_argument("--generate", metavar="CONFIG", help="generate a synthetic sweep from a config")
    f.add_argument("--config", help="config supplying filter settings for --in")
    f.add_argument("--seed", type=int)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_filter_offline)

    c = sub.add_parser("calibrate", help="NLL sweep over the model-noise scale")
    c.add_argument("--sweep", default="0.25,0.5,1,2,4")
    c.add_argument("--config")
    c.add_argument("--seed", type=int)
    c.add_argument("--out", default="calibration.csv")
    c.set_defaults(func=cmd_calibrate)

    m = sub.add_parser("metrics", help="recompute the metric report of a trajectory CSV")
    m.add_argument("trajectory")
    m.add_argument("--config", required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seeds", 1) < 1 or getattr(args, "jobs", 1) < 1:
        print("error: --seeds and --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, csvio.CsvFormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
