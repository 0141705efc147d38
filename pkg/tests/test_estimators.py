import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from tactile_servo.estimators import HeteroscedasticKalmanFilter, McDropoutFusion, ModelNoiseCalibrator
from tactile_servo.filter import KfParams, ScalarKalmanFilter, calibrate_model_noise
from tactile_servo.sensor import McBatch, PoseSensor, fuse_mc_batch
from tactile_servo.sim import SweepSpec, generate_offline_dataset


def batches_matrix(records, param="x"):
    return np.array([np.concatenate([getattr(r, param).u, getattr(r, param).v]) for r in records])


def test_fusion_transformer_matches_function():
    recs = generate_offline_dataset(PoseSensor(), SweepSpec(n=30), seed=0)
    X = batches_matrix(recs)
    out = McDropoutFusion().fit_transform(X)
    for row, r in zip(out, recs):
        m = fuse_mc_batch(r.x)
        assert tuple(row) == (m.mu, m.r)


def test_fusion_validation():
    with pytest.raises(NotFittedError):
        McDropoutFusion().transform(np.zeros((1, 4)))
    with pytest.raises(ValueError):
        McDropoutFusion().fit(np.zeros((2, 3)))
    est = McDropoutFusion().fit(np.zeros((2, 6)))
    with pytest.raises(ValueError):
        est.transform(np.zeros((2, 4)))
    with pytest.raises(ValueError):
        est.transform(np.full((1, 6), np.nan))


def test_kalman_transformer_matches_filter():
    rng = np.random.default_rng(2)
    X = np.column_stack([rng.normal(0, 1, 50), rng.uniform(0.1, 1, 50),
                         rng.normal(0, 10, 50), rng.uniform(1, 5, 50)])
    est = HeteroscedasticKalmanFilter(q=[0.01, 1.0])
    out = est.fit_transform(X)
    xs, ps = ScalarKalmanFilter(KfParams(0.01)).filter(X[:, 0], X[:, 1])
    assert np.array_equal(out[:, 0], xs) and np.array_equal(out[:, 1], ps)
    xs, ps = ScalarKalmanFilter(KfParams(1.0)).filter(X[:, 2], X[:, 3])
    assert np.array_equal(out[:, 2], xs) and np.array_equal(out[:, 3], ps)


def test_kalman_params_and_clone():
    est = HeteroscedasticKalmanFilter(q=0.5, x0=1.0, p0=2.0)
    assert est.get_params() == {"q": 0.5, "x0": 1.0, "p0": 2.0}
    c = clone(est.set_params(q=0.2))
    assert c.q == 0.2 and not hasattr(c, "params_")
    with pytest.raises(ValueError):
        HeteroscedasticKalmanFilter().fit(np.array([[0.0, -1.0]]))
    with pytest.raises(ValueError):
        HeteroscedasticKalmanFilter().fit(np.zeros((3, 3)))
    with pytest.raises(NotFittedError):
        HeteroscedasticKalmanFilter().transform(np.zeros((3, 2)))


def test_fusion_then_filter_pipeline():
    recs = generate_offline_dataset(PoseSensor(), SweepSpec(n=100), seed=4)
    pipe = make_pipeline(McDropoutFusion(), HeteroscedasticKalmanFilter(q=0.01))
    out = pipe.fit_transform(batches_matrix(recs))
    mu = np.array([fuse_mc_batch(r.x).mu for r in recs])
    r = np.array([fuse_mc_batch(r.x).r for r in recs])
    xs, _ = ScalarKalmanFilter(KfParams(0.01)).filter(mu, r)
    assert np.array_equal(out[:, 0], xs)


def test_calibrator():
    truths = SweepSpec(n=200)
    X = np.array([[t.x, t.theta] for t in truths.truths()])
    cal = ModelNoiseCalibrator(sweep=(0.5, 1.0, 2.0), seed=3).fit(X)
    ref = calibrate_model_noise([0.5, 1.0, 2.0], truths.truths(), PoseSensor(), seed=3)
    assert cal.best_scale_ == ref.argmin_scale == 1.0
    assert np.array_equal(cal.nll_, ref.nll)
    with pytest.raises(ValueError):
        ModelNoiseCalibrator().fit(np.zeros((3, 3)))


def test_mcbatch_rejects_ragged():
    with pytest.raises(ValueError):
        McBatch([1.0, 2.0], [0.1])
