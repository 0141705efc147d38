import json

import pytest

from tactile_servo.config import ConfigError, load_config, parse_config, run_seed
from tactile_servo.geometry import Clover, Disk, Polyline, Teardrop


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def test_defaults(tmp_path):
    cfg = load_config(write(tmp_path, {"shape": {"kind": "disk"}}), env={})
    assert isinstance(cfg.sim.shape, Disk) and cfg.sim.shape.radius == 50
    assert cfg.sim.kf_x.q == pytest.approx(0.01)
    assert cfg.sim.kf_theta.q == pytest.approx(1.0)
    assert cfg.sim.gains.kp_x == 0.5 and cfg.sim.gains.ki_x == 0.05
    assert cfg.sensor.x.sigma_center == 0.3 and cfg.sensor.theta.sigma_edge == 2.5
    assert cfg.sensor.mc.n == 13
    assert cfg.sweep.n == 1000


def test_all_shape_kinds(tmp_path):
    (tmp_path / "poly.csv").write_text("x_mm,y_mm\n0,0\n10,0\n10,10\n0,10\n")
    kinds = {
        Teardrop: {"kind": "teardrop", "radius": 25, "apex_half_angle": 20},
        Clover: {"kind": "clover", "base_radius": 40, "amplitude": 10, "lobes": 4},
        Polyline: {"kind": "polyline", "csv": "poly.csv"},
    }
    for cls, shape in kinds.items():
        cfg = load_config(write(tmp_path, {"shape": shape}), env={})
        assert isinstance(cfg.sim.shape, cls)
    cfg = load_config(write(tmp_path, {"shape": {"kind": "polyline", "vertices": [[0, 0], [1, 0], [0, 1]]}}), env={})
    assert cfg.sim.shape.perimeter == pytest.approx(2 + 2**0.5)


def test_overrides(tmp_path):
    cfg = load_config(write(tmp_path, {
        "shape": {"kind": "disk", "radius": 30},
        "steps": 100, "delta": 0.25, "seed": 9, "mode": "unfiltered",
        "sensor": {"x": {"bias": 0.2}, "mc": {"n": 7, "model_noise_scale": 2.0}},
        "kf": {"x": {"q_std": 0.2}, "theta": {"q": 4.0}},
        "gains": {"kp_x": 0.3}, "reference": {"x_ref": 1.0},
        "sweep": {"n": 11},
    }), env={})
    assert cfg.sim.steps == 100 and cfg.sim.delta == 0.25 and cfg.sim.seed == 9
    assert cfg.sim.mode == "unfiltered"
    assert cfg.sensor.x.bias == 0.2 and cfg.sensor.mc.n == 7
    assert cfg.sim.kf_x.q == pytest.approx(0.04) and cfg.sim.kf_theta.q == 4.0
    assert cfg.sim.gains.kp_x == 0.3 and cfg.sim.gains.ki_x == 0.05
    assert cfg.sim.reference.x_ref == 1.0
    assert len(cfg.sweep.truths()) == 11


@pytest.mark.parametrize("obj, fragment", [
    ({}, "shape"),
    ({"shape": {"radius": 3}}, "shape.kind"),
    ({"shape": {"kind": "disk", "raduis": 3}}, "shape.raduis"),
    ({"shape": {"kind": "blob"}}, "blob"),
    ({"shape": {"kind": "disk"}, "sensor": {"x": {"sigma": 1}}}, "sensor.x.sigma"),
    ({"shape": {"kind": "disk"}, "sensor": {"x": {"sigma_center": "a"}}}, "sensor.x.sigma_center"),
    ({"shape": {"kind": "disk"}, "steps": 1.5}, "config.steps"),
    ({"shape": {"kind": "disk"}, "seed": -1}, "config.seed"),
    ({"shape": {"kind": "disk"}, "kf": {"x": {"q": 0}}}, "kf.x"),
    ({"shape": {"kind": "disk"}, "gains": {"kd_x": 1}}, "gains.kd_x"),
    ({"shape": {"kind": "disk"}, "mode": "both"}, "config.mode"),
    ({"shape": {"kind": "clover", "amplitude": 20}}, "shape"),
    ({"shape": {"kind": "disk"}, "unknown": 1}, "config.unknown"),
])
def test_errors_name_the_key(tmp_path, obj, fragment):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, obj), env={})
    assert fragment in str(info.value)


def test_json_syntax_error_reports_line(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, '{\n  "shape": {"kind": "disk"},\n  "steps": ,\n}'), env={})
    assert "line 3" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json", env={})


def test_seed_env_override(tmp_path):
    path = write(tmp_path, {"shape": {"kind": "disk"}, "seed": 1})
    assert load_config(path, env={"SERVO_SIM_SEED": "77"}).sim.seed == 77
    with pytest.raises(ConfigError):
        load_config(path, env={"SERVO_SIM_SEED": "x"})


def test_shape_optional_when_not_needed():
    cfg = parse_config({"seed": 3}, require_shape=False)
    assert isinstance(cfg.sim.shape, Disk)


def test_run_seed_split():
    seeds = [run_seed(0, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2**64 for s in seeds)
    assert run_seed(0, 5) == run_seed(0, 5)
    assert run_seed(0, 5) != run_seed(1, 5)
