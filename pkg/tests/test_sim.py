import math

import numpy as np
import pytest

from tactile_servo.control import PiGains
from tactile_servo.geometry import Disk, EdgePose, Teardrop
from tactile_servo.sensor import PoseSensor
from tactile_servo.sim import (
    MIN_CLOSURE_STEPS,
    SimConfig,
    SweepSpec,
    generate_offline_dataset,
    run_offline_filter,
    run_servo,
)

QUIET = PoseSensor.noiseless()


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(steps=0)
    with pytest.raises(ValueError):
        SimConfig(delta=0.0)
    with pytest.raises(ValueError):
        SimConfig(mode="smoothed")


def test_noiseless_disk_closes_on_contour():
    traj = run_servo(SimConfig(sensor=QUIET, mode="filtered"))
    assert traj.termination == "closed"
    assert max(abs(r.truth.x) for r in traj.steps[10:]) < 0.05
    assert 600 < len(traj) < 640


def test_determinism():
    cfg = SimConfig(shape=Teardrop(), seed=123, steps=300)
    a, b = run_servo(cfg), run_servo(cfg)
    assert np.array_equal(a.points(), b.points())
    assert [r.meas_x for r in a.steps] == [r.meas_x for r in b.steps]
    assert [r.kf_theta for r in a.steps] == [r.kf_theta for r in b.steps]


def test_closure_not_before_minimum():
    # a 3 mm disk is lapped in about 38 steps; closure must still wait
    traj = run_servo(SimConfig(shape=Disk((0, 0), 3.0), sensor=QUIET))
    assert traj.termination == "closed"
    assert len(traj) >= MIN_CLOSURE_STEPS


def test_step_bounds_and_range_flags():
    traj = run_servo(SimConfig(shape=Teardrop(), seed=4))
    pts = traj.points()
    gaps = np.hypot(*np.diff(pts, axis=0).T)
    assert np.all(gaps <= 0.5 + 5.0 + 1e-9)
    assert len(traj) <= traj.config.steps
    for r in traj.steps:
        assert r.out_of_range == (abs(r.truth.x) > 5 or abs(r.truth.theta) > 45)


def test_unfiltered_has_no_filter_state():
    traj = run_servo(SimConfig(mode="unfiltered", steps=20))
    assert all(r.kf_x is None and r.kf_theta is None for r in traj.steps)
    traj = run_servo(SimConfig(mode="filtered", steps=20))
    assert all(r.kf_x is not None for r in traj.steps)


def test_zero_gains_lose_contact():
    traj = run_servo(SimConfig(sensor=QUIET, gains=PiGains(0, 0, 0, 0, 1.0)))
    assert traj.termination == "contact_lost"
    assert "20" in traj.detail


def test_step_limit():
    traj = run_servo(SimConfig(steps=30))
    assert traj.termination == "max_steps"
    assert len(traj) == 30


def test_filtered_heading_changes_are_smoother():
    for seed in range(3):
        f = run_servo(SimConfig(seed=seed, mode="filtered"))
        u = run_servo(SimConfig(seed=seed, mode="unfiltered"))
        var = [np.var(np.diff(np.unwrap(t.headings()))) for t in (f, u)]
        assert var[0] < var[1]


def test_sweep_truths():
    xs = [t.x for t in SweepSpec(n=11, theta_min=0, theta_max=0).truths()]
    assert xs == pytest.approx(list(range(-5, 6)))


def test_offline_determinism():
    a = generate_offline_dataset(PoseSensor(), SweepSpec(n=50), seed=8)
    b = generate_offline_dataset(PoseSensor(), SweepSpec(n=50), seed=8)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.x.u, rb.x.u) and np.array_equal(ra.theta.v, rb.theta.v)


def test_offline_constant_truth_noiseless():
    truths = SweepSpec(n=40, x_min=1.2, x_max=1.2, theta_min=-7, theta_max=-7)
    series = run_offline_filter(generate_offline_dataset(QUIET, truths, seed=0))
    assert np.allclose(series.kf_x, 1.2, atol=1e-12)
    assert np.allclose(series.kf_theta, -7.0, atol=1e-12)
    assert len(series) == 40


def test_offline_single_record():
    rec = generate_offline_dataset(PoseSensor(), SweepSpec(n=1), seed=2)
    series = run_offline_filter(rec)
    assert series.kf_x[0] == series.mu_x[0]
    assert series.kf_theta[0] == series.mu_theta[0]


def test_offline_validation():
    with pytest.raises(ValueError):
        run_offline_filter([])
    rec = generate_offline_dataset(PoseSensor(), SweepSpec(n=3), seed=2)
    swapped = [rec[1], rec[0], rec[2]]
    with pytest.raises(ValueError):
        run_offline_filter(swapped)


def test_offline_edge_spread_exceeds_centre():
    sensor = PoseSensor()
    rng = np.random.default_rng(0)
    spread = {}
    for t in (0.0, 5.0):
        spread[t] = np.std([sensor.measure(EdgePose(t, 0.0), rng)[0].mu for _ in range(1000)])
    assert spread[5.0] / spread[0.0] == pytest.approx(0.75 / 0.3, rel=0.15)


def test_offline_summary_keys():
    series = run_offline_filter(generate_offline_dataset(PoseSensor(), SweepSpec(n=200), seed=1))
    s = series.summary()
    assert s["ratio_x"] == pytest.approx(s["mae_filtered_x"] / s["mae_unfiltered_x"])
    assert s["ratio_x"] < 1 and s["ratio_theta"] < 1
    assert all(math.isfinite(v) for v in s.values())
