"""CSV schemas of trajectories, offline series and calibration sweeps.

Floats are written with 17 significant digits so that files round-trip
exactly and are byte-identical across runs.
"""

from __future__ import annotations

import csv
import math
import re

import numpy as np

from .geometry import EdgePose
from .sensor import McBatch, Measurement
from .sim import OfflineRecord

TRAJECTORY_COLUMNS = (
    "step", "x_mm", "y_mm", "heading_deg", "gt_x", "gt_theta",
    "mu_x", "R_x", "mu_theta", "R_theta", "kf_x", "P_x", "kf_theta", "P_theta",
    "cmd_normal", "cmd_yaw", "term_reason",
)
OFFLINE_COLUMNS = (
    "index", "gt_x", "gt_theta", "mu_x", "R_x", "mu_theta", "R_theta",
    "kf_x", "P_x", "kf_theta", "P_theta",
)
CALIBRATION_COLUMNS = ("scale", "nll", "mae_x", "mae_theta")


class CsvFormatError(ValueError):
    """Malformed input CSV; the message carries row/column context."""


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_trajectory_csv(path, traj):
    rows = traj.steps
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for i, r in enumerate(rows):
            last = i == len(rows) - 1
            w.writerow([
                fmt(r.step), fmt(r.frame.origin.x), fmt(r.frame.origin.y),
                fmt(math.degrees(r.frame.heading)), fmt(r.truth.x), fmt(r.truth.theta),
                fmt(r.meas_x.mu), fmt(r.meas_x.r), fmt(r.meas_theta.mu), fmt(r.meas_theta.r),
                fmt(r.kf_x.x_hat if r.kf_x else None), fmt(r.kf_x.p if r.kf_x else None),
                fmt(r.kf_theta.x_hat if r.kf_theta else None), fmt(r.kf_theta.p if r.kf_theta else None),
                fmt(r.command.d_normal), fmt(r.command.d_yaw),
                traj.termination if last else "",
            ])


def _float(row, col, lineno, allow_empty=False):
    raw = row.get(col)
    if raw is None:
        raise CsvFormatError(f"row {lineno}: missing column {col!r}")
    if raw == "" and allow_empty:
        return None
    try:
        return float(raw)
    except ValueError:
        raise CsvFormatError(f"row {lineno}, column {col!r}: not a number: {raw!r}") from None


def read_trajectory_csv(path):
    """Columns of a trajectory CSV as a dict of numpy arrays (plus ``term_reason``)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CsvFormatError(f"{path}: empty file")
        missing = [c for c in ("x_mm", "y_mm") if c not in reader.fieldnames]
        if missing:
            raise CsvFormatError(f"{path}: missing column {missing[0]!r}")
        xs, ys, term = [], [], ""
        for lineno, row in enumerate(reader, start=2):
            xs.append(_float(row, "x_mm", lineno))
            ys.append(_float(row, "y_mm", lineno))
            term = row.get("term_reason") or term
    return {"x_mm": np.array(xs), "y_mm": np.array(ys), "term_reason": term}


def write_offline_csv(path, series):
    cols = [series.index, series.gt_x, series.gt_theta, series.mu_x, series.r_x,
            series.mu_theta, series.r_theta, series.kf_x, series.p_x, series.kf_theta, series.p_theta]
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(OFFLINE_COLUMNS)
        for i in range(len(series)):
            w.writerow([fmt(int(cols[0][i]))] + [fmt(c[i]) for c in cols[1:]])


def write_offline_input_csv(path, records):
    """Write raw-batch offline input: ``index,gt_x,gt_theta,u_x_0..,v_x_0..,u_theta_0..,v_theta_0..``."""
    n = records[0].x.n
    header = ["index", "gt_x", "gt_theta"]
    for p in ("x", "theta"):
        header += [f"u_{p}_{t}" for t in range(n)] + [f"v_{p}_{t}" for t in range(n)]
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(header)
        for r in records:
            row = [fmt(r.index), fmt(r.truth.x), fmt(r.truth.theta)]
            for b in (r.x, r.theta):
                row += [fmt(u) for u in b.u] + [fmt(v) for v in b.v]
            w.writerow(row)


_BATCH_COL = re.compile(r"^([uv])_(x|theta)_(\d+)$")


def read_offline_input(path):
    """Read offline records from CSV with either fused (``mu_*``, ``R_*``) or raw batch columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames
        if not cols:
            raise CsvFormatError(f"{path}: empty file")
        for c in ("index", "gt_x", "gt_theta"):
            if c not in cols:
                raise CsvFormatError(f"{path}: missing column {c!r}")
        fused = all(c in cols for c in ("mu_x", "R_x", "mu_theta", "R_theta"))
        batch_idx = {}
        for c in cols:
            m = _BATCH_COL.match(c)
            if m:
                batch_idx.setdefault((m.group(1), m.group(2)), []).append(int(m.group(3)))
        if not fused:
            n = len(batch_idx.get(("u", "x"), []))
            for key in (("u", "x"), ("v", "x"), ("u", "theta"), ("v", "theta")):
                if sorted(batch_idx.get(key, [])) != list(range(n)) or n < 2:
                    raise CsvFormatError(
                        f"{path}: need fused columns mu_x,R_x,mu_theta,R_theta or raw batch "
                        f"columns u_x_0..,v_x_0..,u_theta_0..,v_theta_0.. (n >= 2)")
        records = []
        for lineno, row in enumerate(reader, start=2):
            idx = _float(row, "index", lineno)
            if idx != int(idx):
                raise CsvFormatError(f"row {lineno}, column 'index': not an integer")
            truth = EdgePose(_float(row, "gt_x", lineno), _float(row, "gt_theta", lineno))
            if fused:
                mx = Measurement(_float(row, "mu_x", lineno), _float(row, "R_x", lineno))
                mt = Measurement(_float(row, "mu_theta", lineno), _float(row, "R_theta", lineno))
                for name, m in (("R_x", mx), ("R_theta", mt)):
                    if not m.r >= 0:
                        raise CsvFormatError(f"row {lineno}, column {name!r}: variance must be >= 0")
            else:
                def batch(p):
                    u = [_float(row, f"u_{p}_{t}", lineno) for t in range(n)]
                    v = [_float(row, f"v_{p}_{t}", lineno) for t in range(n)]
                    try:
                        return McBatch(np.array(u), np.array(v))
                    except ValueError as exc:
                        raise CsvFormatError(f"row {lineno}: {exc}") from None
                mx, mt = batch("x"), batch("theta")
            records.append(OfflineRecord(int(idx), truth, mx, mt))
    if not records:
        raise CsvFormatError(f"{path}: no data rows")
    if any(b.index <= a.index for a, b in zip(records, records[1:])):
        raise CsvFormatError(f"{path}: index column must be strictly increasing")
    return records


def write_calibration_csv(path, result):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(CALIBRATION_COLUMNS)
        for row in result.rows():
            w.writerow([fmt(row[c]) for c in CALIBRATION_COLUMNS])


def write_rows_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([row[c] if isinstance(row[c], str) else fmt(row[c]) for c in columns])
