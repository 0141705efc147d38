"""Trajectory error against an ideal circle and the S100 regularity score."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import Disk, polygon_perimeter_area


class EmptyTrajectory(ValueError):
    pass


class DegenerateTrajectory(ValueError):
    pass


@dataclass(frozen=True)
class CircleRef:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")

    @classmethod
    def from_disk(cls, disk):
        return cls(tuple(disk.center), disk.radius)


@dataclass(frozen=True)
class MetricReport:
    mae: float | None
    mse: float | None
    s100: float
    n_points: int
    perimeter_est: float
    area_est: float

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def _points(traj):
    pts = np.asarray(traj, dtype=float).reshape(-1, 2)
    return pts


def mae_mse_circle(traj, ref):
    """Mean absolute and mean squared radial deviation from ``ref``."""
    pts = _points(traj)
    if pts.shape[0] == 0:
        raise EmptyTrajectory("no trajectory points")
    d = np.hypot(pts[:, 0] - ref.center[0], pts[:, 1] - ref.center[1])
    dr = np.abs(ref.radius - d)
    return float(np.mean(dr)), float(np.mean(dr * dr))


def closed_polyline(traj, tol=1e-6):
    """Close ``traj`` by repeating the first point when the end gap exceeds ``tol``."""
    pts = _points(traj)
    if pts.shape[0] and math.hypot(*(pts[-1] - pts[0])) > tol:
        pts = np.vstack([pts, pts[:1]])
    return pts


def trajectory_perimeter_area(traj):
    pts = closed_polyline(traj)
    # polygon_perimeter_area closes implicitly; drop the duplicated vertex
    if pts.shape[0] > 1 and np.array_equal(pts[-1], pts[0]):
        pts = pts[:-1]
    return polygon_perimeter_area(pts)


def s100(traj, ideal):
    """Regularity of a closed trajectory relative to ``ideal``, in percent.

    ``(P**2 / A) * (A_est / P_est**2) * 100`` with ``P``, ``A`` from the
    ideal shape.  Equals 100 when the trajectory is as compact as the ideal;
    jagged trajectories score lower.  Not capped at 100.
    """
    pts = _points(traj)
    if pts.shape[0] < 3:
        raise DegenerateTrajectory("S100 needs at least 3 points")
    p_est, a_est = trajectory_perimeter_area(pts)
    if a_est == 0.0:
        raise DegenerateTrajectory("trajectory encloses zero area")
    p, a = ideal.perimeter_area()
    return (p * p / a) * (a_est / (p_est * p_est)) * 100.0


def evaluate(traj, ideal):
    """Full :class:`MetricReport`; MAE/MSE only for disk ideals."""
    pts = _points(traj)
    p_est, a_est = trajectory_perimeter_area(pts)
    mae = mse = None
    if isinstance(ideal, Disk):
        mae, mse = mae_mse_circle(pts, CircleRef.from_disk(ideal))
    return MetricReport(mae, mse, s100(pts, ideal), int(pts.shape[0]), p_est, a_est)
