"""Parametric 2D test shapes and the ground-truth edge pose of a virtual sensor.

Every shape is a closed contour traversed counterclockwise and addressed by
arc length ``s`` (millimetres).  Internally each shape has its own native
parameter ``t`` (arc length for piecewise shapes, polar angle for the clover);
nearest-point searches run on ``t`` and report ``s``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, minimize_scalar

#: Valid sensing range of the edge pose (normal offset in mm, yaw in degrees).
X_RANGE_MM = 5.0
THETA_RANGE_DEG = 45.0

#: Distance from the contour beyond which the sensor has lost contact.
CONTACT_LIMIT_MM = 20.0

_COARSE_SAMPLES = 1024
_REFINE_TOL_MM = 1e-10
_CORNER_SNAP_MM = 1e-5


class ContactLost(RuntimeError):
    """The sensor is too far from the contour to sense the edge."""

    def __init__(self, distance, limit=CONTACT_LIMIT_MM):
        super().__init__(f"sensor is {distance:.3f} mm from the contour (limit {limit} mm)")
        self.distance = distance
        self.limit = limit


def wrap_angle(a):
    """Wrap an angle in radians to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def wrap_degrees(a):
    """Wrap an angle in degrees to (-180, 180]."""
    w = math.remainder(a, 360.0)
    if w <= -180.0:
        w += 360.0
    return w


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance(self, other):
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Frame2:
    """Sensor placement in the world frame; ``heading`` is the direction of travel."""

    origin: Point2
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))


@dataclass(frozen=True)
class EdgePose:
    """Local pose of the sensor relative to the nearest edge point.

    ``x`` is the signed normal offset in mm (positive outside the shape) and
    ``theta`` the yaw misalignment in degrees, wrapped to (-180, 180].
    """

    x: float
    theta: float

    @property
    def in_range(self):
        return abs(self.x) <= X_RANGE_MM and abs(self.theta) <= THETA_RANGE_DEG


class Shape:
    """Base class for closed counterclockwise contours."""

    kind = "shape"

    # -- native parameterisation, overridden by subclasses -------------------
    @property
    def t_period(self):
        raise NotImplementedError

    def _points(self, t):
        """Vectorised contour points for native parameters ``t`` (shape (n, 2))."""
        raise NotImplementedError

    def _tangent(self, t):
        raise NotImplementedError

    def _t_to_s(self, t):
        return t

    def _s_to_t(self, s):
        return s

    def _corners_t(self):
        return ()

    def _corner_tangents(self, t):
        """One-sided tangents (incoming, outgoing) at a corner."""
        eps = 1e-9 * self.t_period
        return self._tangent(t - eps), self._tangent(t + eps)

    # -- public API ----------------------------------------------------------
    @property
    def perimeter(self):
        raise NotImplementedError

    def contour_point(self, s):
        """Point and tangent heading (radians) at arc length ``s``, wrapped modulo the perimeter."""
        t = self._s_to_t(math.fmod(s, self.perimeter) % self.perimeter)
        p = self._points(np.array([t]))[0]
        return Point2(float(p[0]), float(p[1])), wrap_angle(self._tangent(t))

    def polygon(self, n=4096):
        """Dense closed polygonisation (first vertex not repeated), corners included."""
        t = np.linspace(0.0, self.t_period, n, endpoint=False)
        corners = np.asarray(self._corners_t(), dtype=float)
        if corners.size:
            t = np.unique(np.concatenate([t, corners]))
        return self._points(t)

    def perimeter_area(self):
        return polygon_perimeter_area(self.polygon(8192))

    def nearest(self, p):
        """Globally nearest contour parameter to ``p``: (t, distance, at_corner)."""
        q = np.array([p.x, p.y])
        period = self.t_period
        grid = np.linspace(0.0, period, _COARSE_SAMPLES, endpoint=False)
        d2 = np.sum((self._points(grid) - q) ** 2, axis=1)
        i = int(np.argmin(d2))
        step = period / _COARSE_SAMPLES

        def dist2(t):
            pt = self._points(np.array([t]))[0]
            return float((pt[0] - q[0]) ** 2 + (pt[1] - q[1]) ** 2)

        # refine on an offset around the coarse minimum: the solver's relative
        # tolerance term would otherwise scale with |t|
        t0 = float(grid[i])
        xatol = _REFINE_TOL_MM * period / self.perimeter
        res = minimize_scalar(lambda u: dist2(t0 + u), bounds=(-step, step), method="bounded",
                              options={"xatol": xatol})
        t_best, d2_best = t0 + float(res.x), float(res.fun)
        if d2[i] < d2_best:
            t_best, d2_best = float(grid[i]), float(d2[i])

        # squared distance is flat at its minimum, so polish on the
        # orthogonality condition (p(t) - q) . tangent(t) = 0 instead
        def ortho(t):
            pt = self._points(np.array([t]))[0]
            a = self._tangent(t)
            return float((pt[0] - q[0]) * math.cos(a) + (pt[1] - q[1]) * math.sin(a))

        h = 1e-6 * period / self.perimeter
        lo, hi = ortho(t_best - h), ortho(t_best + h)
        if lo < 0.0 < hi:
            t_root = brentq(ortho, t_best - h, t_best + h, xtol=1e-15 * period, rtol=4 * np.finfo(float).eps)
            d2_root = dist2(t_root)
            if d2_root <= d2_best + 1e-12:
                t_best, d2_best = t_root, d2_root

        at_corner = False
        for tc in self._corners_t():
            gap = abs(wrap_param(t_best - tc, period)) * self.perimeter / period
            if gap < _CORNER_SNAP_MM:
                d2c = dist2(tc)
                if d2c <= d2_best + 1e-12:
                    t_best, d2_best = float(tc), d2c
                at_corner = True
                break
        t_best %= period
        if t_best >= period:
            t_best = 0.0
        return t_best, math.sqrt(max(d2_best, 0.0)), at_corner


def wrap_param(dt, period):
    """Wrap a parameter difference to [-period/2, period/2)."""
    return (dt + 0.5 * period) % period - 0.5 * period


def polygon_perimeter_area(pts):
    """Closed-polygon perimeter and absolute shoelace area."""
    pts = np.asarray(pts, dtype=float)
    pts = pts - pts.mean(axis=0)  # centring keeps the shoelace sum free of cancellation
    nxt = np.roll(pts, -1, axis=0)
    perimeter = float(np.sum(np.hypot(*(nxt - pts).T)))
    area = 0.5 * abs(float(np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1])))
    return perimeter, area


class Disk(Shape):
    kind = "disk"

    def __init__(self, center=(0.0, 0.0), radius=50.0):
        if not radius > 0:
            raise ValueError("disk radius must be positive")
        self.center = (float(center[0]), float(center[1]))
        self.radius = float(radius)

    @property
    def t_period(self):
        return 2.0 * math.pi * self.radius

    @property
    def perimeter(self):
        return 2.0 * math.pi * self.radius

    def _points(self, t):
        phi = np.asarray(t) / self.radius
        return np.column_stack([self.center[0] + self.radius * np.cos(phi),
                                self.center[1] + self.radius * np.sin(phi)])

    def _tangent(self, t):
        return t / self.radius + 0.5 * math.pi

    def perimeter_area(self):
        return 2.0 * math.pi * self.radius, math.pi * self.radius ** 2

    def to_dict(self):
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}


class _Piecewise(Shape):
    """Contour built from line and circular-arc segments; native parameter is arc length."""

    def __init__(self, segments, s_offset=0.0):
        # segment: ("line", p0, p1) or ("arc", center, radius, angle0, sweep)
        self._segments = segments
        lengths = []
        for seg in segments:
            if seg[0] == "line":
                lengths.append(math.dist(seg[1], seg[2]))
            else:
                lengths.append(seg[2] * seg[4])
        self._lengths = np.array(lengths)
        self._starts = np.concatenate([[0.0], np.cumsum(self._lengths)[:-1]])
        self._total = float(np.sum(self._lengths))
        self._s_offset = s_offset % self._total
        self._corner_raw = [float(self._starts[i]) for i in range(len(segments))
                            if self._is_corner(i)]

    def _is_corner(self, i):
        out_dir = self._seg_tangent(i, 0.0)
        in_dir = self._seg_tangent(i - 1, self._lengths[i - 1])
        return abs(wrap_angle(out_dir - in_dir)) > 1e-9

    def _seg_tangent(self, i, u):
        seg = self._segments[i]
        if seg[0] == "line":
            (x0, y0), (x1, y1) = seg[1], seg[2]
            return math.atan2(y1 - y0, x1 - x0)
        _, _, r, a0, _ = seg
        return a0 + u / r + 0.5 * math.pi

    @property
    def t_period(self):
        return self._total

    @property
    def perimeter(self):
        return self._total

    def _locate(self, t):
        raw = (np.asarray(t, dtype=float) + self._s_offset) % self._total
        idx = np.clip(np.searchsorted(self._starts, raw, side="right") - 1, 0, len(self._segments) - 1)
        return idx, raw - self._starts[idx]

    def _points(self, t):
        idx, u = self._locate(np.atleast_1d(t))
        out = np.empty((idx.size, 2))
        for k, seg in enumerate(self._segments):
            m = idx == k
            if not np.any(m):
                continue
            if seg[0] == "line":
                p0, p1 = np.asarray(seg[1]), np.asarray(seg[2])
                f = (u[m] / self._lengths[k])[:, None]
                out[m] = p0 + f * (p1 - p0)
            else:
                _, c, r, a0, _ = seg
                a = a0 + u[m] / r
                out[m] = np.column_stack([c[0] + r * np.cos(a), c[1] + r * np.sin(a)])
        return out

    def _tangent(self, t):
        idx, u = self._locate(np.atleast_1d(t))
        return self._seg_tangent(int(idx[0]), float(u[0]))

    def _corners_t(self):
        return tuple((c - self._s_offset) % self._total for c in self._corner_raw)


class Teardrop(_Piecewise):
    """Circle of ``radius`` closed by the two tangent lines from an external apex.

    ``apex_half_angle`` (degrees) is the half-angle between the two straight
    sides; the apex points along ``apex_direction`` (degrees).  Arc length 0
    sits on the circle diametrically opposite the apex.
    """

    kind = "teardrop"

    def __init__(self, center=(0.0, 0.0), radius=30.0, apex_half_angle=30.0, apex_direction=0.0):
        if not radius > 0:
            raise ValueError("teardrop radius must be positive")
        if not 0.0 < apex_half_angle < 90.0:
            raise ValueError("apex half-angle must lie in (0, 90) degrees")
        self.center = (float(center[0]), float(center[1]))
        self.radius = float(radius)
        self.apex_half_angle = float(apex_half_angle)
        self.apex_direction = float(apex_direction)

        alpha = math.radians(apex_half_angle)
        psi = math.radians(apex_direction)
        beta = 0.5 * math.pi - alpha  # angular position of tangent points relative to apex axis
        cx, cy = self.center
        r = self.radius
        d = r / math.sin(alpha)
        apex = (cx + d * math.cos(psi), cy + d * math.sin(psi))
        t_in = (cx + r * math.cos(psi - beta), cy + r * math.sin(psi - beta))
        t_out = (cx + r * math.cos(psi + beta), cy + r * math.sin(psi + beta))
        segments = [
            ("arc", self.center, r, psi + beta, 2.0 * math.pi - 2.0 * beta),
            ("line", t_in, apex),
            ("line", apex, t_out),
        ]
        self.apex = Point2(*apex)
        super().__init__(segments, s_offset=r * (math.pi - beta))

    @property
    def apex_s(self):
        return self._corners_t()[0]

    def to_dict(self):
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius,
                "apex_half_angle": self.apex_half_angle, "apex_direction": self.apex_direction}


class Polyline(_Piecewise):
    """Closed polygon; vertices are reordered counterclockwise if needed."""

    kind = "polyline"

    def __init__(self, vertices):
        pts = [(float(x), float(y)) for x, y in vertices]
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]
        if len(pts) < 3:
            raise ValueError("polyline needs at least 3 distinct vertices")
        arr = np.array(pts)
        nxt = np.roll(arr, -1, axis=0)
        signed = 0.5 * float(np.sum(arr[:, 0] * nxt[:, 1] - nxt[:, 0] * arr[:, 1]))
        if signed == 0.0:
            raise ValueError("polyline encloses zero area")
        if signed < 0:
            pts = pts[::-1]
        self.vertices = tuple(pts)
        segments = [("line", pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]
        if any(math.dist(s[1], s[2]) == 0.0 for s in segments):
            raise ValueError("polyline has repeated consecutive vertices")
        super().__init__(segments)

    def perimeter_area(self):
        return polygon_perimeter_area(np.array(self.vertices))

    def to_dict(self):
        return {"kind": self.kind, "vertices": [list(v) for v in self.vertices]}


class Clover(Shape):
    """Radial contour ``rho(phi) = base_radius + amplitude * cos(lobes * phi)``."""

    kind = "clover"
    _TABLE = 4096
    _GL_NODES, _GL_WEIGHTS = leggauss(12)

    def __init__(self, center=(0.0, 0.0), base_radius=40.0, amplitude=8.0, lobes=4):
        lobes = int(lobes)
        if not base_radius > 0:
            raise ValueError("clover base radius must be positive")
        if lobes < 1:
            raise ValueError("clover needs at least one lobe")
        if not 0.0 <= amplitude <= base_radius / 4.0:
            raise ValueError("clover amplitude must lie in [0, base_radius / 4]")
        self.center = (float(center[0]), float(center[1]))
        self.base_radius = float(base_radius)
        self.amplitude = float(amplitude)
        self.lobes = lobes
        grid = np.linspace(0.0, 2.0 * math.pi, self._TABLE + 1)
        seg = np.array([self._integrate(a, b) for a, b in zip(grid[:-1], grid[1:])])
        self._grid = grid
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self._total = float(self._cum[-1])

    def _speed(self, phi):
        rho = self.base_radius + self.amplitude * np.cos(self.lobes * phi)
        drho = -self.amplitude * self.lobes * np.sin(self.lobes * phi)
        return np.hypot(rho, drho)

    def _integrate(self, a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return half * float(np.dot(self._GL_WEIGHTS, self._speed(mid + half * self._GL_NODES)))

    @property
    def t_period(self):
        return 2.0 * math.pi

    @property
    def perimeter(self):
        return self._total

    def _points(self, t):
        phi = np.asarray(t, dtype=float)
        rho = self.base_radius + self.amplitude * np.cos(self.lobes * phi)
        return np.column_stack([self.center[0] + rho * np.cos(phi), self.center[1] + rho * np.sin(phi)])

    def _tangent(self, t):
        rho = self.base_radius + self.amplitude * math.cos(self.lobes * t)
        drho = -self.amplitude * self.lobes * math.sin(self.lobes * t)
        return math.atan2(drho * math.sin(t) + rho * math.cos(t), drho * math.cos(t) - rho * math.sin(t))

    def _t_to_s(self, t):
        t = t % (2.0 * math.pi)
        i = min(int(t / self._grid[1]), self._TABLE - 1)
        return float(self._cum[i]) + self._integrate(self._grid[i], t)

    def _s_to_t(self, s):
        i = int(np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, self._TABLE - 1))
        a, b = self._grid[i], self._grid[i + 1]
        t = a + (b - a) * (s - self._cum[i]) / (self._cum[i + 1] - self._cum[i])
        for _ in range(8):
            err = float(self._cum[i]) + self._integrate(a, t) - s
            t -= err / float(self._speed(t))
            if abs(err) < 1e-13 * max(1.0, self._total):
                break
        return t

    def to_dict(self):
        return {"kind": self.kind, "center": list(self.center), "base_radius": self.base_radius,
                "amplitude": self.amplitude, "lobes": self.lobes}


def contour_point(shape, s):
    """Point and tangent heading (radians) at arc length ``s`` along ``shape``."""
    return shape.contour_point(s)


def shape_perimeter_area(shape):
    """Perimeter (mm) and enclosed area (mm^2) of a closed shape."""
    return shape.perimeter_area()


def local_edge_pose(shape, sensor, contact_limit=CONTACT_LIMIT_MM):
    """Ground-truth edge pose of ``sensor`` relative to the nearest contour point.

    Returns ``(EdgePose, nearest_s)``.  At a corner the tangent is taken
    perpendicular to the sensor-to-corner direction, which is the gradient of
    the distance field there.

    Raises:
        ContactLost: if the sensor is more than ``contact_limit`` mm away.
    """
    t, dist, at_corner = shape.nearest(sensor.origin)
    if dist > contact_limit:
        raise ContactLost(dist, contact_limit)
    q = shape._points(np.array([t]))[0]
    dx, dy = sensor.origin.x - q[0], sensor.origin.y - q[1]

    if at_corner:
        t_in, t_out = shape._corner_tangents(t)
        bisector = t_in + 0.5 * wrap_angle(t_out - t_in)
        n_out = (math.sin(bisector), -math.cos(bisector))
        sign = 1.0 if dx * n_out[0] + dy * n_out[1] >= 0.0 else -1.0
        if dist > 1e-9:
            # tangent = outward normal rotated +90 deg
            tangent = math.atan2(sign * dy, sign * dx) + 0.5 * math.pi
        else:
            tangent = bisector
    else:
        tangent = shape._tangent(t)
        n_out = (math.sin(tangent), -math.cos(tangent))
        sign = 1.0 if dx * n_out[0] + dy * n_out[1] >= 0.0 else -1.0

    theta = wrap_degrees(math.degrees(sensor.heading - tangent))
    return EdgePose(sign * dist, theta), float(shape._t_to_s(t))


def load_polyline_csv(path):
    """Read a ``x_mm,y_mm`` CSV into a :class:`Polyline`."""
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x_mm", "y_mm"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header x_mm,y_mm")
        verts = [(float(row["x_mm"]), float(row["y_mm"])) for row in reader]
    return Polyline(verts)


SHAPES = {"disk": Disk, "teardrop": Teardrop, "clover": Clover, "polyline": Polyline}
