"""Scalar constant-state Kalman filter with per-step measurement variance, and NLL calibration.

Each pose parameter is filtered by its own scalar filter.  The predict step
keeps the state and inflates its variance by the process variance ``q``; the
update step blends prior and measurement with a gain computed from that
step's measurement variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

#: Floor on the posterior variance so that an R = 0 update does not freeze the filter.
P_MIN = 1e-12


class NonFiniteInput(ValueError):
    """A measurement mean or variance is NaN or infinite."""


class ZeroVariance(ValueError):
    """A predictive variance passed to :func:`nll` is not strictly positive."""


@dataclass(frozen=True)
class KfParams:
    """Filter settings for one pose parameter.

    ``x0``/``p0`` left as ``None`` mean "initialise from the first measurement".
    """

    q: float
    x0: float | None = None
    p0: float | None = None

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("process variance q must be positive")
        if self.p0 is not None and not self.p0 > 0:
            raise ValueError("initial variance p0 must be positive")

    @classmethod
    def from_std(cls, std, **kw):
        """Build from a per-step process standard deviation."""
        return cls(q=float(std) ** 2, **kw)


@dataclass(frozen=True)
class KfState:
    x_hat: float
    p: float
    k: int = 0


def kf_predict(state, params):
    """Constant-state predict: ``(x_hat, p + q)``."""
    return state.x_hat, state.p + params.q


def kf_update(prior, z, r, k=0):
    """Measurement update of a prior ``(x_hat, p)`` with measurement ``z`` of variance ``r``."""
    x_prior, p_prior = prior
    if not (math.isfinite(z) and math.isfinite(r)):
        raise NonFiniteInput(f"non-finite measurement z={z!r}, R={r!r}")
    if r < 0:
        raise ValueError(f"measurement variance must be non-negative, got {r!r}")
    gain = p_prior / (p_prior + r)
    x_hat = x_prior + gain * (z - x_prior)
    # (1 - K) P- written as P- R / (P- + R): no cancellation when K is near 1
    p = max(p_prior * r / (p_prior + r), P_MIN)
    return KfState(x_hat, p, k)


def kf_step(state, params, z, r=None):
    """One predict/update cycle.

    ``z`` is either a measurement mean (with ``r`` its variance) or a fused
    measurement carrying ``mu`` and ``r``.
    """
    if r is None:
        z, r = z.mu, z.r
    return kf_update(kf_predict(state, params), z, r, state.k + 1)


def kf_init(params, z, r):
    """State after the first measurement.

    Without an explicit prior the first measurement is adopted as-is
    (``x0 = z``, ``p0 = r``); otherwise the prior ``(x0, p0)`` is stepped
    with it like any later measurement.
    """
    if not (math.isfinite(z) and math.isfinite(r)):
        raise NonFiniteInput(f"non-finite measurement z={z!r}, R={r!r}")
    if params.x0 is None and params.p0 is None:
        return KfState(z, max(r, P_MIN), 0)
    prior = KfState(z if params.x0 is None else params.x0,
                    max(r, P_MIN) if params.p0 is None else params.p0, -1)
    return kf_step(prior, params, z, r)


class ScalarKalmanFilter:
    """Stateful wrapper that initialises itself on the first measurement."""

    def __init__(self, params):
        self.params = params
        self.state = None

    def step(self, z, r):
        if self.state is None:
            self.state = kf_init(self.params, z, r)
        else:
            self.state = kf_step(self.state, self.params, z, r)
        return self.state

    def filter(self, zs, rs):
        """Run over whole sequences; returns arrays of estimates and variances."""
        xs, ps = [], []
        for z, r in zip(zs, rs):
            st = self.step(float(z), float(r))
            xs.append(st.x_hat)
            ps.append(st.p)
        return np.array(xs), np.array(ps)


def nll(predictions, truths):
    """Mean Gaussian negative log-likelihood (natural log) of ``truths``.

    Args:
        predictions: sequence of ``(mu, var)`` pairs, or an array of shape (n, 2).
        truths: sequence of n observed values.
    """
    pred = np.asarray(predictions, dtype=float).reshape(-1, 2)
    y = np.asarray(truths, dtype=float).ravel()
    if pred.shape[0] != y.shape[0]:
        raise ValueError(f"{pred.shape[0]} predictions but {y.shape[0]} truths")
    if y.size == 0:
        raise ValueError("nll of an empty set")
    mu, var = pred[:, 0], pred[:, 1]
    if np.any(~(var > 0)):
        raise ZeroVariance("all predictive variances must be > 0")
    return float(np.mean(0.5 * np.log(2.0 * np.pi * var) + (y - mu) ** 2 / (2.0 * var)))


@dataclass
class CalibrationResult:
    scales: list
    nll: list
    mae_x: list
    mae_theta: list
    argmin_scale: float
    nll_x: list = field(default_factory=list)
    nll_theta: list = field(default_factory=list)

    @property
    def mae_rank_correlation(self):
        """Spearman correlation of total normalised MAE against scale."""
        if len(self.scales) < 2:
            return float("nan")
        return float(spearmanr(self.scales, self.mae_total).statistic)

    @property
    def mae_total(self):
        from .sensor import X_RANGE_MM, THETA_RANGE_DEG

        return [mx / X_RANGE_MM + mt / THETA_RANGE_DEG for mx, mt in zip(self.mae_x, self.mae_theta)]

    def rows(self):
        return [
            {"scale": s, "nll": n, "mae_x": mx, "mae_theta": mt}
            for s, n, mx, mt in zip(self.scales, self.nll, self.mae_x, self.mae_theta)
        ]


def calibrate_model_noise(sweep, dataset, sensor, seed=0, var_floor=P_MIN):
    """Sweep the sensor's model-noise scale and pick the NLL minimiser.

    For each scale the sensor is run over every truth pose in ``dataset``
    (with the same random stream, so only the Monte-Carlo spread changes),
    each batch is fused, and NLL and MAE of the fused mean against the truth
    are computed.  The reported NLL is the sum of the per-parameter NLLs.
    Ties go to the smaller scale.

    Args:
        sweep: ascending, non-empty sequence of scales.
        dataset: sequence of :class:`~tactile_servo.geometry.EdgePose` truths.
        sensor: a :class:`~tactile_servo.sensor.PoseSensor` whose latent error
            level is fixed by its ``reference_scale``.
        seed: master seed of the sensor draws.
        var_floor: lower bound applied to fused variances before the NLL.
    """
    from .sensor import fuse_mc_batch

    sweep = [float(s) for s in sweep]
    if not sweep:
        raise ValueError("sweep must be non-empty")
    if any(b <= a for a, b in zip(sweep, sweep[1:])):
        raise ValueError("sweep must be strictly ascending")
    truths = list(dataset)
    if not truths:
        raise ValueError("calibration dataset is empty")
    gt_x = np.array([t.x for t in truths])
    gt_th = np.array([t.theta for t in truths])

    out_nll, out_nx, out_nt, out_mx, out_mt = [], [], [], [], []
    for scale in sweep:
        probe = sensor.with_scale(scale)
        rng = np.random.default_rng(seed)
        mx, rx, mt, rt = [], [], [], []
        for truth in truths:
            bx, bt = probe.sample(truth, rng)
            fx, ft = fuse_mc_batch(bx), fuse_mc_batch(bt)
            mx.append(fx.mu)
            rx.append(max(fx.r, var_floor))
            mt.append(ft.mu)
            rt.append(max(ft.r, var_floor))
        nx = nll(np.column_stack([mx, rx]), gt_x)
        nt = nll(np.column_stack([mt, rt]), gt_th)
        out_nx.append(nx)
        out_nt.append(nt)
        out_nll.append(nx + nt)
        out_mx.append(float(np.mean(np.abs(np.array(mx) - gt_x))))
        out_mt.append(float(np.mean(np.abs(np.array(mt) - gt_th))))

    best = int(np.argmin(out_nll))  # first index wins ties -> smaller scale
    return CalibrationResult(sweep, out_nll, out_mx, out_mt, sweep[best], out_nx, out_nt)
