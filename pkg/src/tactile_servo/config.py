"""JSON experiment configuration.

Schema (every section optional except ``shape``; unknown keys are errors)::

    {
      "shape":     {"kind": "disk", "center": [0, 0], "radius": 50},
      "steps": 5000, "delta": 0.5, "seed": 0, "start_s": 0.0,
      "sensor": {
        "x":     {"sigma_center": 0.3, "sigma_edge": 0.75, "bias": 0.1,
                  "bias_power": 4, "outlier_prob": 0.1, "outlier_scale": 5,
                  "data_fraction": 0.5},
        "theta": {...same keys...},
        "mc":    {"n": 13, "model_noise_scale": 1.0, "reference_scale": 1.0}
      },
      "kf":        {"x": {"q": 0.01}, "theta": {"q_std": 1.0}},
      "gains":     {"kp_x": 0.5, "ki_x": 0.05, "kp_theta": 0.5, "ki_theta": 0.05,
                    "integral_clamp": 2.0},
      "reference": {"x_ref": 0.0, "theta_ref": 0.0},
      "sweep":     {"n": 1000, "x_min": -5, "x_max": 5, "theta_min": -45, "theta_max": 45}
    }

Shape kinds: ``disk`` (center, radius), ``teardrop`` (center, radius,
apex_half_angle, apex_direction), ``clover`` (center, base_radius, amplitude,
lobes), ``polyline`` (vertices, or csv relative to the config file).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import PiGains, ReferencePose
from .filter import KfParams
from .geometry import Clover, Disk, Polyline, Teardrop, load_polyline_csv
from .sensor import DEFAULT_THETA_PROFILE, DEFAULT_X_PROFILE, McConfig, NoiseProfile, PoseSensor
from .sim import DEFAULT_KF_THETA, DEFAULT_KF_X, SimConfig, SweepSpec

SEED_ENV = "SERVO_SIM_SEED"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or line."""


@dataclass
class ExperimentConfig:
    sim: SimConfig
    sweep: SweepSpec = field(default_factory=SweepSpec)
    source: Path | None = None

    @property
    def sensor(self):
        return self.sim.sensor


def _section(obj, path, allowed):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key")
    return obj


def _num(obj, key, path, default=None, integer=False):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}: expected a finite number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _point(obj, key, path, default=(0.0, 0.0)):
    if key not in obj:
        return default
    v = obj[key]
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
        raise ConfigError(f"{path}.{key}: expected [x, y]")
    return (float(v[0]), float(v[1]))


def _wrap(path, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_shape(obj, path="shape", base_dir=None):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{path}.kind: missing required key")
    kind = obj["kind"]
    if kind == "disk":
        _section(obj, path, {"kind", "center", "radius"})
        return _wrap(path, Disk, _point(obj, "center", path), _num(obj, "radius", path, 50.0))
    if kind == "teardrop":
        _section(obj, path, {"kind", "center", "radius", "apex_half_angle", "apex_direction"})
        return _wrap(path, Teardrop, _point(obj, "center", path), _num(obj, "radius", path, 30.0),
                     _num(obj, "apex_half_angle", path, 30.0), _num(obj, "apex_direction", path, 0.0))
    if kind == "clover":
        _section(obj, path, {"kind", "center", "base_radius", "amplitude", "lobes"})
        return _wrap(path, Clover, _point(obj, "center", path), _num(obj, "base_radius", path, 40.0),
                     _num(obj, "amplitude", path, 8.0), _num(obj, "lobes", path, 4, integer=True))
    if kind == "polyline":
        _section(obj, path, {"kind", "vertices", "csv"})
        if ("vertices" in obj) == ("csv" in obj):
            raise ConfigError(f"{path}: give exactly one of 'vertices' or 'csv'")
        if "csv" in obj:
            csv_path = Path(obj["csv"])
            if base_dir is not None and not csv_path.is_absolute():
                csv_path = Path(base_dir) / csv_path
            return _wrap(f"{path}.csv", load_polyline_csv, csv_path)
        verts = obj["vertices"]
        if not isinstance(verts, list):
            raise ConfigError(f"{path}.vertices: expected a list of [x, y]")
        pts = [_point({"v": v}, "v", f"{path}.vertices[{i}]") for i, v in enumerate(verts)]
        return _wrap(path, Polyline, pts)
    raise ConfigError(f"{path}.kind: unknown shape kind {kind!r}")


_PROFILE_KEYS = ("sigma_center", "sigma_edge", "bias", "bias_power", "outlier_prob",
                 "outlier_scale", "data_fraction")


def _profile(obj, path, default):
    _section(obj, path, _PROFILE_KEYS)
    kw = {k: _num(obj, k, path, getattr(default, k)) for k in _PROFILE_KEYS}
    return _wrap(path, NoiseProfile, **kw)


def parse_sensor(obj, path="sensor"):
    _section(obj, path, {"x", "theta", "mc"})
    x = _profile(obj.get("x", {}), f"{path}.x", DEFAULT_X_PROFILE)
    theta = _profile(obj.get("theta", {}), f"{path}.theta", DEFAULT_THETA_PROFILE)
    mc_obj = _section(obj.get("mc", {}), f"{path}.mc", {"n", "model_noise_scale", "reference_scale"})
    d = McConfig()
    mc = _wrap(f"{path}.mc", McConfig,
               _num(mc_obj, "n", f"{path}.mc", d.n, integer=True),
               _num(mc_obj, "model_noise_scale", f"{path}.mc", d.model_noise_scale),
               _num(mc_obj, "reference_scale", f"{path}.mc", d.reference_scale))
    return PoseSensor(x, theta, mc)


def _kf(obj, path, default):
    _section(obj, path, {"q", "q_std"})
    if "q" in obj and "q_std" in obj:
        raise ConfigError(f"{path}: give only one of 'q' and 'q_std'")
    if "q_std" in obj:
        return _wrap(path, KfParams.from_std, _num(obj, "q_std", path))
    return _wrap(path, KfParams, _num(obj, "q", path, default.q))


def parse_config(data, base_dir=None, require_shape=True):
    """Build an :class:`ExperimentConfig` from decoded JSON."""
    top = _section(data, "config", {"shape", "steps", "delta", "seed", "start_s", "mode",
                                    "sensor", "kf", "gains", "reference", "sweep"})
    if "shape" in top:
        shape = parse_shape(top["shape"], "shape", base_dir)
    elif require_shape:
        raise ConfigError("config.shape: missing required key")
    else:
        shape = Disk()
    sensor = parse_sensor(top.get("sensor", {}))
    kf = _section(top.get("kf", {}), "kf", {"x", "theta"})
    kf_x = _kf(kf.get("x", {}), "kf.x", DEFAULT_KF_X)
    kf_theta = _kf(kf.get("theta", {}), "kf.theta", DEFAULT_KF_THETA)
    g = _section(top.get("gains", {}), "gains", PiGains.__dataclass_fields__)
    gains = _wrap("gains", PiGains, **{k: _num(g, k, "gains", getattr(PiGains(), k)) for k in g})
    r = _section(top.get("reference", {}), "reference", ReferencePose.__dataclass_fields__)
    ref = _wrap("reference", ReferencePose, **{k: _num(r, k, "reference") for k in r})
    sw = _section(top.get("sweep", {}), "sweep", SweepSpec.__dataclass_fields__)
    sweep = _wrap("sweep", SweepSpec, **{k: _num(sw, k, "sweep", integer=(k == "n")) for k in sw})

    mode = top.get("mode", "filtered")
    if mode not in ("filtered", "unfiltered"):
        raise ConfigError(f"config.mode: expected 'filtered' or 'unfiltered', got {mode!r}")
    seed = _num(top, "seed", "config", 0, integer=True)
    if seed < 0:
        raise ConfigError("config.seed: must be non-negative")
    sim = _wrap("config", SimConfig, shape=shape,
                steps=_num(top, "steps", "config", 5000, integer=True),
                delta=_num(top, "delta", "config", 0.5),
                mode=mode, seed=seed, sensor=sensor, kf_x=kf_x, kf_theta=kf_theta,
                gains=gains, reference=ref, start_s=_num(top, "start_s", "config", 0.0))
    return ExperimentConfig(sim, sweep)


def load_config(path, env=None, require_shape=True):
    """Read and validate a JSON config; ``SERVO_SIM_SEED`` overrides ``seed``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            data["seed"] = int(env[SEED_ENV])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{SEED_ENV}: expected an integer") from exc
    cfg = parse_config(data, base_dir=path.parent, require_shape=require_shape)
    cfg.source = path
    return cfg


def run_seed(master, index):
    """64-bit seed of run ``index`` derived from ``master``.

    ``SeedSequence(master, spawn_key=(index,))`` gives statistically
    independent, collision-free streams for every (master, index) pair.
    """
    words = np.random.SeedSequence(int(master), spawn_key=(int(index),)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
