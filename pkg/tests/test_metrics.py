import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tactile_servo.geometry import Clover, Disk
from tactile_servo.metrics import (
    CircleRef,
    DegenerateTrajectory,
    EmptyTrajectory,
    evaluate,
    mae_mse_circle,
    s100,
)

DISK = Disk((0.0, 0.0), 50.0)
REF = CircleRef((0.0, 0.0), 50.0)


def circle(n, r=50.0, c=(0.0, 0.0), phase=0.0):
    phi = phase + np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([c[0] + r * np.cos(phi), c[1] + r * np.sin(phi)])


def test_constant_offset():
    mae, mse = mae_mse_circle(circle(100, 50.3), REF)
    assert mae == pytest.approx(0.3, abs=1e-12)
    assert mse == pytest.approx(0.09, abs=1e-12)


def test_alternating_offset():
    pts = circle(100)
    radii = np.where(np.arange(100) % 2 == 0, 50.5, 49.5)
    pts *= (radii / 50.0)[:, None]
    mae, mse = mae_mse_circle(pts, REF)
    assert mae == pytest.approx(0.5, abs=1e-12)
    assert mse == pytest.approx(0.25, abs=1e-12)


def test_perturbed_circle_against_brute_force():
    rng = np.random.default_rng(0)
    phi = rng.uniform(0, 2 * np.pi, 1000)
    dr = np.abs(rng.normal(0, 0.24, 1000)) * rng.choice([-1, 1], 1000)
    r = 50 + dr
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    mae, mse = mae_mse_circle(pts, REF)
    # independent path: distance to a dense sampled circle
    dense = circle(200_000)
    brute = np.array([np.min(np.hypot(*(dense - p).T)) for p in pts])
    assert mae == pytest.approx(brute.mean(), rel=0.05)
    assert mse == pytest.approx(np.mean(brute**2), rel=0.05)
    assert mae == pytest.approx(np.mean(np.abs(dr)), rel=1e-9)


def test_empty():
    with pytest.raises(EmptyTrajectory):
        mae_mse_circle(np.empty((0, 2)), REF)
    with pytest.raises(ValueError):
        CircleRef((0, 0), 0.0)


def test_square_vs_disk():
    sq = np.array([[0, 0], [3, 0], [3, 3], [0, 3]], dtype=float)
    assert s100(sq, DISK) == pytest.approx(100 * math.pi / 4, abs=1e-10)
    assert s100(sq, DISK) == pytest.approx(78.54, abs=0.01)


def test_720gon():
    assert s100(circle(720), DISK) == pytest.approx(100.0, abs=0.01)


def test_closure_rule():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    closed = np.vstack([sq, sq[:1]])
    assert s100(sq, DISK) == s100(closed, DISK)


def test_degenerate():
    with pytest.raises(DegenerateTrajectory):
        s100(np.array([[0, 0], [1, 1]]), DISK)
    with pytest.raises(DegenerateTrajectory):
        s100(np.array([[0, 0], [1, 1], [2, 2]]), DISK)


def test_jagged_scores_lower():
    phi = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    smooth = circle(2000)
    r = 50 * (1 + 0.05 * np.sign(np.sin(200 * phi)))
    jagged = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    assert s100(jagged, DISK) < s100(smooth, DISK)


def test_radial_noise_lowers_s100():
    base = s100(circle(2000), DISK)
    phi = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    for seed in range(100):
        r = 50 + np.random.default_rng(seed).normal(0, 0.2, phi.size)
        noisy = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        assert s100(noisy, DISK) < base


def test_dense_trace_converges():
    vals = [s100(circle(n), DISK) for n in (50, 500, 5000)]
    assert vals[0] < vals[1] < vals[2] < 100.0
    assert 100 - vals[2] < 1e-3
    mae, mse = mae_mse_circle(circle(5000), REF)
    assert mae < 1e-12 and mse < 1e-24


@given(st.floats(0.01, 100), st.integers(0, 10_000))
def test_scale_invariance(k, seed):
    rng = np.random.default_rng(seed)
    pts = circle(64) + rng.normal(0, 1.0, (64, 2))
    a = s100(pts, DISK)
    b = s100(pts * k, Disk((0, 0), 50.0 * k))
    assert b == pytest.approx(a, rel=1e-9)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-math.pi, math.pi), st.integers(0, 10_000))
def test_rigid_motion_invariance(tx, ty, ang, seed):
    rng = np.random.default_rng(seed)
    pts = circle(64) + rng.normal(0, 1.0, (64, 2))
    c, s = math.cos(ang), math.sin(ang)
    moved = pts @ np.array([[c, s], [-s, c]]) + [tx, ty]
    assert s100(moved, DISK) == pytest.approx(s100(pts, DISK), rel=1e-12)


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=50))
def test_mse_at_least_mae_squared(pts):
    mae, mse = mae_mse_circle(np.array(pts), REF)
    assert mse >= mae * mae * (1 - 1e-12) - 1e-12


def test_evaluate_report():
    rep = evaluate(circle(720, 50.1), DISK)
    assert rep.mae == pytest.approx(0.1, abs=1e-9)
    assert rep.n_points == 720
    assert rep.s100 > 0
    assert json.loads(rep.to_json())["n_points"] == 720
    rep = evaluate(Clover().polygon(2000), Clover())
    assert rep.mae is None and rep.s100 == pytest.approx(100.0, abs=0.01)
