"""scikit-learn style wrappers so fusion, filtering and calibration compose with pipelines.

Array layouts:

* :class:`McDropoutFusion` takes ``X`` of shape ``(n_records, 2 * n)`` laid
  out as ``[u_0 .. u_{n-1}, v_0 .. v_{n-1}]`` and returns ``(n_records, 2)``
  columns ``[mu, R]``.
* :class:`HeteroscedasticKalmanFilter` takes ``(n_steps, 2 * d)`` with
  ``[mu_0, R_0, mu_1, R_1, ...]`` for ``d`` independent parameters and
  returns the same layout with ``[x_hat_i, P_i]``.  Rows are time-ordered.
* :class:`ModelNoiseCalibrator` is fit on truth poses ``(n, 2)`` with
  columns ``[x_mm, theta_deg]``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .filter import KfParams, ScalarKalmanFilter, calibrate_model_noise
from .geometry import EdgePose
from .sensor import McBatch, PoseSensor, fuse_mc_batch


class McDropoutFusion(TransformerMixin, BaseEstimator):
    """Fuse MC sample batches into mean and total variance."""

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] % 2 or X.shape[1] < 4:
            raise ValueError("X must have 2 * n columns with n >= 2")
        self.n_features_in_ = X.shape[1]
        self.n_samples_ = X.shape[1] // 2
        return self

    def transform(self, X):
        check_is_fitted(self, "n_samples_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        n = self.n_samples_
        out = np.empty((X.shape[0], 2))
        for i, row in enumerate(X):
            m = fuse_mc_batch(McBatch(row[:n], row[n:]))
            out[i] = (m.mu, m.r)
        return out


class HeteroscedasticKalmanFilter(TransformerMixin, BaseEstimator):
    """Constant-state scalar Kalman filters driven by per-row measurement variances.

    Parameters
    ----------
    q : float or sequence of float
        Process variance, one value shared or one per parameter.
    x0, p0 : float, optional
        Initial state and variance; by default the first row initialises
        the filter.
    """

    def __init__(self, q=0.01, x0=None, p0=None):
        self.q = q
        self.x0 = x0
        self.p0 = p0

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] % 2:
            raise ValueError("X must hold (mu, R) column pairs")
        d = X.shape[1] // 2
        q = np.broadcast_to(np.asarray(self.q, dtype=float), (d,)).copy()
        if np.any(X[:, 1::2] < 0):
            raise ValueError("measurement variances must be non-negative")
        self.params_ = [KfParams(float(qi), self.x0, self.p0) for qi in q]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        out = np.empty_like(X)
        for j, params in enumerate(self.params_):
            xs, ps = ScalarKalmanFilter(params).filter(X[:, 2 * j], X[:, 2 * j + 1])
            out[:, 2 * j], out[:, 2 * j + 1] = xs, ps
        return out


class ModelNoiseCalibrator(BaseEstimator):
    """Select the model-noise scale minimising the NLL over a truth set."""

    def __init__(self, sweep=(0.25, 0.5, 1.0, 2.0, 4.0), sensor=None, seed=0):
        self.sweep = sweep
        self.sensor = sensor
        self.seed = seed

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("X must have columns [x_mm, theta_deg]")
        sensor = PoseSensor() if self.sensor is None else self.sensor
        truths = [EdgePose(float(a), float(b)) for a, b in X]
        self.result_ = calibrate_model_noise(list(self.sweep), truths, sensor, seed=self.seed)
        self.best_scale_ = self.result_.argmin_scale
        self.nll_ = np.asarray(self.result_.nll)
        self.n_features_in_ = 2
        return self
