"""Closed-loop contour following and the offline filtering experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control import DEFAULT_STEP_MM, Integrator, PiGains, ReferencePose, pi_control, to_base_frame
from .filter import KfParams, KfState, ScalarKalmanFilter
from .geometry import ContactLost, Disk, EdgePose, Frame2, Shape, local_edge_pose
from .sensor import McBatch, Measurement, PoseSensor, fuse_mc_batch

MODES = ("filtered", "unfiltered")

#: Loop closure is not tested before this many steps.
MIN_CLOSURE_STEPS = 50

#: Process standard deviations per step (0.1 mm, 1 deg), squared into variances.
DEFAULT_KF_X = KfParams.from_std(0.1)
DEFAULT_KF_THETA = KfParams.from_std(1.0)


@dataclass(frozen=True)
class SimConfig:
    shape: Shape = field(default_factory=Disk)
    steps: int = 5000
    delta: float = DEFAULT_STEP_MM
    mode: str = "filtered"
    seed: int = 0
    sensor: PoseSensor = field(default_factory=PoseSensor)
    kf_x: KfParams = DEFAULT_KF_X
    kf_theta: KfParams = DEFAULT_KF_THETA
    gains: PiGains = PiGains()
    reference: ReferencePose = ReferencePose()
    start_s: float = 0.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    frame: Frame2
    truth: EdgePose
    nearest_s: float
    meas_x: Measurement
    meas_theta: Measurement
    kf_x: KfState | None
    kf_theta: KfState | None
    command: object

    @property
    def out_of_range(self):
        return not self.truth.in_range


@dataclass
class Trajectory:
    config: SimConfig
    steps: list = field(default_factory=list)
    termination: str = "max_steps"
    detail: str = ""

    def points(self):
        """Sensor origins, shape (n, 2)."""
        return np.array([[r.frame.origin.x, r.frame.origin.y] for r in self.steps]).reshape(-1, 2)

    def headings(self):
        return np.array([r.frame.heading for r in self.steps])

    @property
    def closed(self):
        return self.termination == "closed"

    def __len__(self):
        return len(self.steps)


def _segment_point_distance(a, b, p):
    ab = b - a
    L2 = float(ab @ ab)
    u = 0.0 if L2 == 0.0 else min(1.0, max(0.0, float((p - a) @ ab) / L2))
    return float(np.hypot(*(a + u * ab - p)))


def run_servo(config):
    """Follow the contour of ``config.shape`` until loop closure, step limit or contact loss.

    Each step: ground-truth pose -> MC batch -> fusion -> (Kalman step in
    filtered mode) -> PI command -> frame update.  The loop closes once at
    least :data:`MIN_CLOSURE_STEPS` steps were taken and the latest move
    passes within one step length of the starting point.
    """
    shape = config.shape
    rng = np.random.default_rng(config.seed)
    start_pt, start_heading = shape.contour_point(config.start_s)
    frame = Frame2(start_pt, start_heading)
    start = np.array([start_pt.x, start_pt.y])
    filtered = config.mode == "filtered"
    fx, ft = ScalarKalmanFilter(config.kf_x), ScalarKalmanFilter(config.kf_theta)
    integ = Integrator()
    traj = Trajectory(config)

    for k in range(config.steps):
        try:
            truth, s_near = local_edge_pose(shape, frame)
        except ContactLost as exc:
            traj.termination, traj.detail = "contact_lost", str(exc)
            return traj
        mx, mt = config.sensor.measure(truth, rng)
        if filtered:
            kx, kt = fx.step(mx.mu, mx.r), ft.step(mt.mu, mt.r)
            estimate = EdgePose(kx.x_hat, kt.x_hat)
        else:
            kx = kt = None
            estimate = EdgePose(mx.mu, mt.mu)
        cmd, integ = pi_control(estimate, config.reference, config.gains, integ, config.delta)
        traj.steps.append(StepRecord(k, frame, truth, s_near, mx, mt, kx, kt, cmd))

        prev = np.array([frame.origin.x, frame.origin.y])
        frame = to_base_frame(cmd, frame)
        if k + 1 >= MIN_CLOSURE_STEPS:
            here = np.array([frame.origin.x, frame.origin.y])
            if _segment_point_distance(prev, here, start) <= config.delta:
                traj.termination = "closed"
                return traj
    return traj


# -- offline experiment -------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Linear sweep of both pose parameters, increasing together."""

    n: int = 1000
    x_min: float = -5.0
    x_max: float = 5.0
    theta_min: float = -45.0
    theta_max: float = 45.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sweep needs at least one record")

    def truths(self):
        xs = np.linspace(self.x_min, self.x_max, self.n)
        ts = np.linspace(self.theta_min, self.theta_max, self.n)
        return [EdgePose(float(x), float(t)) for x, t in zip(xs, ts)]


@dataclass(frozen=True)
class OfflineRecord:
    """Truth plus either raw MC batches or already fused measurements."""

    index: int
    truth: EdgePose
    x: McBatch | Measurement
    theta: McBatch | Measurement


def generate_offline_dataset(sensor, sweep=SweepSpec(), seed=0):
    """Ordered synthetic predictions over ``sweep``, reproducible by ``seed``."""
    rng = np.random.default_rng(seed)
    out = []
    for i, truth in enumerate(sweep.truths()):
        bx, bt = sensor.sample(truth, rng)
        out.append(OfflineRecord(i, truth, bx, bt))
    return out


@dataclass
class OfflineSeries:
    index: np.ndarray
    gt_x: np.ndarray
    gt_theta: np.ndarray
    mu_x: np.ndarray
    r_x: np.ndarray
    mu_theta: np.ndarray
    r_theta: np.ndarray
    kf_x: np.ndarray
    p_x: np.ndarray
    kf_theta: np.ndarray
    p_theta: np.ndarray

    def __len__(self):
        return self.index.size

    def summary(self):
        """Unfiltered and filtered MAE per parameter, and their ratios."""
        out = {}
        for name in ("x", "theta"):
            gt = getattr(self, f"gt_{name}")
            raw = float(np.mean(np.abs(getattr(self, f"mu_{name}") - gt)))
            filt = float(np.mean(np.abs(getattr(self, f"kf_{name}") - gt)))
            out[f"mae_unfiltered_{name}"] = raw
            out[f"mae_filtered_{name}"] = filt
            out[f"ratio_{name}"] = filt / raw if raw > 0 else math.nan
        return out


def _as_measurement(m):
    return fuse_mc_batch(m) if isinstance(m, McBatch) else m


def run_offline_filter(records, kf_x=DEFAULT_KF_X, kf_theta=DEFAULT_KF_THETA):
    """Fuse each record (if needed) and run the two scalar filters in record order."""
    records = list(records)
    if not records:
        raise ValueError("offline series is empty")
    if any(b.index <= a.index for a, b in zip(records, records[1:])):
        raise ValueError("offline records must have strictly increasing indices")
    mx = [_as_measurement(r.x) for r in records]
    mt = [_as_measurement(r.theta) for r in records]
    mu_x, r_x = np.array([m.mu for m in mx]), np.array([m.r for m in mx])
    mu_t, r_t = np.array([m.mu for m in mt]), np.array([m.r for m in mt])
    kx, px = ScalarKalmanFilter(kf_x).filter(mu_x, r_x)
    kt, pt = ScalarKalmanFilter(kf_theta).filter(mu_t, r_t)
    return OfflineSeries(
        index=np.array([r.index for r in records]),
        gt_x=np.array([r.truth.x for r in records]),
        gt_theta=np.array([r.truth.theta for r in records]),
        mu_x=mu_x, r_x=r_x, mu_theta=mu_t, r_theta=r_t,
        kf_x=kx, p_x=px, kf_theta=kt, p_theta=pt,
    )
