"""Independent reference computations shared by the test modules."""

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(24)


def _composite_gl(lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    y = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    w = (half[:, None] * _WEIGHTS[None, :]).ravel()
    return y, w


def mixture_moments(u, v, panels=600):
    """Mean and variance of the equal-weight mixture of Normal(u_t, v_t) by quadrature of its density."""
    u = np.asarray(u, dtype=float)
    sd = np.sqrt(np.asarray(v, dtype=float))
    lo = float(np.min(u - 14 * sd))
    hi = float(np.max(u + 14 * sd))
    y, w = _composite_gl(lo, hi, panels)
    z = (y[:, None] - u[None, :]) / sd[None, :]
    pdf = np.mean(np.exp(-0.5 * z * z) / (sd[None, :] * np.sqrt(2 * np.pi)), axis=1)
    m0 = np.sum(w * pdf)
    mean = np.sum(w * y * pdf) / m0
    var = np.sum(w * (y - mean) ** 2 * pdf) / m0
    return float(mean), float(var)


def posterior_product(x, p, z, r):
    """Precision-weighted product of Normal(x, p) and Normal(z, r)."""
    return (r * x + p * z) / (p + r), p * r / (p + r)
