"""Closed-form Brownian quantities the validation suites compare against."""

import math

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats

from ltbridge.common.errors import DomainError


def hitting_time_cdf(t, level: float = 1.0):
    """P(T_level <= t) for standard BM from 0: 2 (1 - Phi(level / sqrt t))."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        out = 2.0 * scipy.special.ndtr(-abs(level) / np.sqrt(np.where(t > 0, t, np.nan)))
    return np.where(t > 0, out, 0.0)


def truncated_hitting_time_cdf(level: float, horizon: float):
    """CDF of T_level given T_level <= horizon."""
    mass = float(hitting_time_cdf(horizon, level))
    if mass <= 0:
        raise DomainError(f"no hitting mass below horizon {horizon}")
    return lambda t: np.minimum(hitting_time_cdf(t, level) / mass, 1.0)


def survival_probability(level: float, t: float) -> float:
    """P(sup_{s<=t} B_s < level) = 2 Phi(level / sqrt t) - 1."""
    return float(2.0 * scipy.special.ndtr(level / math.sqrt(t)) - 1.0)


def tanaka_mean(t: float) -> float:
    """E L^0_t = E|B_t| = sqrt(2 t / pi)."""
    return math.sqrt(2.0 * t / math.pi)


def _abs_moment(a: float, t: float) -> float:
    # E|B_t - a|
    r = math.sqrt(t)
    z = a / r
    return a * (2.0 * scipy.special.ndtr(z) - 1.0) + 2.0 * r * scipy.stats.norm.pdf(z)


def band_local_time_mean(t: float, eps: float) -> float:
    """E of the band estimator (1/2eps) int_0^t 1{|B_s| <= eps} ds for BM from 0.

    Equals the average of E L^a_t over a in [-eps, eps], i.e. Tanaka's
    E|B_t - a| - |a| averaged over the band.
    """
    if eps <= 0 or t <= 0:
        raise DomainError(f"Invalid band ({eps}) or time ({t})")
    value, _ = scipy.integrate.quad(lambda a: _abs_moment(a, t) - a, 0.0, eps, epsabs=1e-13)
    return value / eps
