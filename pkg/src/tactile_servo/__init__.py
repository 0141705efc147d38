"""Simulated tactile contour following with uncertainty-aware Kalman filtering."""

from .control import ControlCommand, Integrator, PiGains, ReferencePose, pi_control, to_base_frame
from .estimators import HeteroscedasticKalmanFilter, McDropoutFusion, ModelNoiseCalibrator
from .filter import (
    CalibrationResult,
    KfParams,
    KfState,
    NonFiniteInput,
    ScalarKalmanFilter,
    ZeroVariance,
    calibrate_model_noise,
    kf_init,
    kf_predict,
    kf_step,
    kf_update,
    nll,
)
from .geometry import (
    Clover,
    ContactLost,
    Disk,
    EdgePose,
    Frame2,
    Point2,
    Polyline,
    Teardrop,
    contour_point,
    local_edge_pose,
    shape_perimeter_area,
)
from .metrics import CircleRef, MetricReport, evaluate, mae_mse_circle, s100
from .sensor import McBatch, McConfig, Measurement, NoiseProfile, PoseSensor, fuse_mc_batch, sample_mc_batch
from .sim import SimConfig, SweepSpec, Trajectory, generate_offline_dataset, run_offline_filter, run_servo

__version__ = "0.1.0"
