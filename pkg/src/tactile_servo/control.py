"""PI control on the estimated edge pose and the sensor-to-base frame transform."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import THETA_RANGE_DEG, X_RANGE_MM, Frame2, Point2, wrap_angle

#: Tangential advance per control step (mm).
DEFAULT_STEP_MM = 0.5


@dataclass(frozen=True)
class PiGains:
    kp_x: float = 0.5
    ki_x: float = 0.05
    kp_theta: float = 0.5
    ki_theta: float = 0.05
    integral_clamp: float = 2.0

    def __post_init__(self):
        if min(self.kp_x, self.ki_x, self.kp_theta, self.ki_theta) < 0:
            raise ValueError("PI gains must be non-negative")
        if not self.integral_clamp > 0:
            raise ValueError("integral_clamp must be positive")


@dataclass(frozen=True)
class ReferencePose:
    x_ref: float = 0.0
    theta_ref: float = 0.0

    def __post_init__(self):
        if abs(self.x_ref) > X_RANGE_MM or abs(self.theta_ref) > THETA_RANGE_DEG:
            raise ValueError("reference pose outside the sensing range")


@dataclass(frozen=True)
class ControlCommand:
    d_normal: float  # mm along the outward sensor normal
    d_yaw: float  # degrees
    d_tangent: float  # mm along the (corrected) heading


@dataclass(frozen=True)
class Integrator:
    x: float = 0.0
    theta: float = 0.0


def _clamp(v, bound):
    return max(-bound, min(bound, v))


def pi_control(estimate, ref, gains, integ=Integrator(), delta=DEFAULT_STEP_MM):
    """One PI step on the pose error ``ref - estimate``.

    ``estimate`` is anything with ``x`` (mm) and ``theta`` (deg) attributes.
    The integrators are clamped to ``+/- integral_clamp`` (anti-windup) and
    the outputs saturated to the sensing range.

    Returns:
        ``(ControlCommand, Integrator)``
    """
    e_x = ref.x_ref - estimate.x
    e_th = ref.theta_ref - estimate.theta
    if not (math.isfinite(e_x) and math.isfinite(e_th)):
        raise ValueError("non-finite pose estimate")
    ix = _clamp(integ.x + e_x, gains.integral_clamp)
    ith = _clamp(integ.theta + e_th, gains.integral_clamp)
    d_normal = _clamp(gains.kp_x * e_x + gains.ki_x * ix, X_RANGE_MM)
    d_yaw = _clamp(gains.kp_theta * e_th + gains.ki_theta * ith, THETA_RANGE_DEG)
    return ControlCommand(d_normal, d_yaw, delta), Integrator(ix, ith)


def to_base_frame(cmd, sensor):
    """Apply a command to the sensor frame: rotate first, then translate.

    The tangential step follows the corrected heading ``h'``; the normal
    correction moves along ``h'`` rotated by -90 degrees, which points out
    of a counterclockwise contour.
    """
    h = wrap_angle(sensor.heading + math.radians(cmd.d_yaw))
    c, s = math.cos(h), math.sin(h)
    ox = sensor.origin.x + cmd.d_tangent * c + cmd.d_normal * s
    oy = sensor.origin.y + cmd.d_tangent * s - cmd.d_normal * c
    return Frame2(Point2(ox, oy), h)
