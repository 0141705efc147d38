"""Synthetic probabilistic pose sensor.

Stands in for a Bayesian network evaluated with Monte-Carlo dropout: for a
ground-truth edge pose it emits, per pose parameter, a batch of ``n`` sample
means ``u_t`` and data variances ``v_t``.  :func:`fuse_mc_batch` turns a batch
into the mean ``mu`` and total variance ``R`` consumed by the filter.

Noise model for one parameter with truth ``y`` and range limit ``L``::

    sigma  = sigma_center + (sigma_edge - sigma_center) * min(|y| / L, 1) ** 2
    centre = y * (1 - bias * min(|y| / L, 1) ** bias_power) + eps   (eps: latent error)
    u_t    = centre + model_noise_scale * s_m * eta_t         (eta_t ~ N(0, 1))
    v_t    = data_fraction * sigma ** 2 * chi_t               (chi_t ~ U(0.8, 1.2))

The latent error ``eps`` is shared by the whole batch: it is what the
network gets wrong for this contact, and averaging more samples cannot remove
it.  ``s_m`` and the variance of ``eps`` are set so that at
``model_noise_scale == reference_scale`` the expected fused variance equals
the expected squared error of the fused mean, both ``sigma ** 2`` at the
default reference scale of 1.  With probability ``outlier_prob`` the centre
jumps by ``+/- outlier_scale * sigma`` and the sample spread is inflated
just enough for ``R`` to cover the jump at the reference scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import THETA_RANGE_DEG, X_RANGE_MM

PARAMS = ("x", "theta")


@dataclass(frozen=True)
class NoiseProfile:
    """Heteroscedastic noise settings for one pose parameter."""

    sigma_center: float
    sigma_edge: float
    bias: float = 0.1
    outlier_prob: float = 0.1
    outlier_scale: float = 5.0
    data_fraction: float = 0.5
    bias_power: float = 4.0

    def __post_init__(self):
        if self.sigma_center < 0 or self.sigma_edge < self.sigma_center:
            raise ValueError("need 0 <= sigma_center <= sigma_edge")
        if not 0.0 <= self.bias < 1.0:
            raise ValueError("bias must lie in [0, 1)")
        if not 0.0 <= self.outlier_prob < 0.5:
            raise ValueError("outlier_prob must lie in [0, 0.5)")
        if self.outlier_scale < 1.0:
            raise ValueError("outlier_scale must be >= 1")
        if not 0.0 <= self.data_fraction <= 1.0:
            raise ValueError("data_fraction must lie in [0, 1]")
        if self.bias_power < 0:
            raise ValueError("bias_power must be non-negative")

    @property
    def noiseless(self):
        return self.sigma_edge == 0.0


#: Defaults reproduce the reported uncertainty profile: (0.3 mm, 1 deg) at the
#: centre of the range rising to (0.75 mm, 2.5 deg) at its extremes.
DEFAULT_X_PROFILE = NoiseProfile(0.3, 0.75)
DEFAULT_THETA_PROFILE = NoiseProfile(1.0, 2.5)


@dataclass(frozen=True)
class McConfig:
    n: int = 13
    model_noise_scale: float = 1.0
    reference_scale: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("MC sample count n must be an integer >= 2")
        if self.model_noise_scale < 0 or self.reference_scale < 0:
            raise ValueError("noise scales must be non-negative")


@dataclass(frozen=True)
class McBatch:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be 1-D arrays of equal length")
        if np.any(v < 0):
            raise ValueError("data variances must be non-negative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self):
        return self.u.size


@dataclass(frozen=True)
class Measurement:
    mu: float
    r: float


def noise_profile_eval(profile, truth, range_limit):
    """Noise standard deviation at ``truth``, quadratic in the normalised distance from 0."""
    if not range_limit > 0:
        raise ValueError("range_limit must be positive")
    frac = min(abs(truth) / range_limit, 1.0)
    return profile.sigma_center + (profile.sigma_edge - profile.sigma_center) * frac * frac


def biased_center(profile, truth, range_limit):
    """Centre-ward shrunk truth; the shrink reaches ``bias`` at the range edge."""
    frac = min(abs(truth) / range_limit, 1.0)
    return truth * (1.0 - profile.bias * frac ** profile.bias_power)


def _spread_components(sigma, profile, mc):
    """(between-sample std at unit scale, latent error std, data variance, outlier spread factor)."""
    n = mc.n
    w = profile.data_fraction
    g = mc.reference_scale
    s_m2 = (1.0 - w) * sigma * sigma * n / (n - 1)
    eps2 = w * sigma * sigma + g * g * s_m2 * (n - 2) / n
    # outlier spread factor that keeps E[R] == E[error^2] for outlier batches
    # at the reference scale; undefined (no spread) when w == 1 or n == 2
    k = profile.outlier_scale
    denom = g * g * (n - 2) * (1.0 - w)
    inflate = math.sqrt(1.0 + k * k * (n - 1) / denom) if denom > 0 else k
    return math.sqrt(s_m2), math.sqrt(eps2), w * sigma * sigma, inflate


def sample_mc_batch(truth, profile, mc, rng, range_limit):
    """Draw one emulated MC-dropout batch for a single pose parameter.

    ``rng`` is a :class:`numpy.random.Generator` owned by the caller.  The
    number and order of draws is fixed (independent of the noise settings),
    so runs that differ only in ``model_noise_scale`` share their latent
    errors and outlier events.
    """
    n = mc.n
    sigma = noise_profile_eval(profile, truth, range_limit)
    s_m, s_eps, data_var, inflate = _spread_components(sigma, profile, mc)

    eps = rng.standard_normal()
    outlier = rng.random() < profile.outlier_prob
    sign = 1.0 if rng.random() < 0.5 else -1.0
    eta = rng.standard_normal(n)
    chi = rng.uniform(0.8, 1.2, n)

    centre = biased_center(profile, truth, range_limit) + s_eps * eps
    spread = mc.model_noise_scale * s_m
    if outlier:
        centre += sign * profile.outlier_scale * sigma
        spread *= inflate
    return McBatch(centre + spread * eta, data_var * chi)


def fuse_mc_batch(batch):
    """Fuse a batch into ``Measurement(mu, R)``.

    ``mu`` is the sample mean of ``u_t``; ``R`` is the population variance of
    ``u_t`` (model uncertainty) plus the mean of ``v_t`` (data uncertainty),
    i.e. the first two moments of the equal-weight Gaussian mixture.
    """
    if batch.n < 2:
        raise ValueError("fusion needs at least two MC samples")
    mu = float(np.mean(batch.u))
    r = float(np.mean((batch.u - mu) ** 2) + np.mean(batch.v))
    return Measurement(mu, r)


@dataclass(frozen=True)
class PoseSensor:
    """Two-parameter sensor: one noise profile per pose parameter."""

    x: NoiseProfile = DEFAULT_X_PROFILE
    theta: NoiseProfile = DEFAULT_THETA_PROFILE
    mc: McConfig = McConfig()
    x_range: float = X_RANGE_MM
    theta_range: float = THETA_RANGE_DEG

    @classmethod
    def noiseless(cls, n=13):
        quiet = NoiseProfile(0.0, 0.0, bias=0.0, outlier_prob=0.0)
        return cls(quiet, quiet, McConfig(n=n))

    def with_scale(self, scale):
        return replace(self, mc=replace(self.mc, model_noise_scale=float(scale)))

    def sample(self, truth, rng):
        """Batches ``(x_batch, theta_batch)`` for an :class:`EdgePose` truth."""
        bx = sample_mc_batch(truth.x, self.x, self.mc, rng, self.x_range)
        bt = sample_mc_batch(truth.theta, self.theta, self.mc, rng, self.theta_range)
        return bx, bt

    def measure(self, truth, rng):
        """Fused ``(Measurement_x, Measurement_theta)``."""
        bx, bt = self.sample(truth, rng)
        return fuse_mc_batch(bx), fuse_mc_batch(bt)


def write_batch_trace(path, records):
    """Dump batches as CSV ``step,param,t,u_t,v_t``.

    ``records`` yields ``(step, {"x": McBatch, "theta": McBatch})``.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "param", "t", "u_t", "v_t"])
        for step, batches in records:
            for name in PARAMS:
                b = batches[name]
                for t, (u, v) in enumerate(zip(b.u, b.v)):
                    w.writerow([step, name, t, repr(float(u)), repr(float(v))])
