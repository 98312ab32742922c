"""Analytic marginal laws used as oracles"""
import numpy as np
from scipy import special, stats

from wetsim.exceptions import BiasWarning
from wetsim.log import Loggers
from wetsim.utils.utility import emit_warning

logger = Loggers.get_named_logger("WETSIM_STATS")


def reflecting_bm_cdf(r: float, x):
    """
    CDF at x of X_r for a reflecting Brownian motion from 0: int_0^x sqrt(2 / (pi r)) exp(-u^2 / (2r)) du.

    :param r: time, positive
    :param x: point(s); negative points map to 0 with a domain warning
    :return: erf(x / sqrt(2 r))
    """
    if r <= 0:
        raise ValueError("r must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        emit_warning(logger, "reflecting_bm_cdf evaluated at negative x, returning 0 there", BiasWarning)
    value = special.erf(np.maximum(x, 0.0) / np.sqrt(2.0 * r))
    return float(value) if value.ndim == 0 else value


def half_gaussian_cdf(x):
    """CDF of |N(0, 1)|, the time-1 marginal of reflecting Brownian motion from 0"""
    return special.erf(np.maximum(np.asarray(x, dtype=float), 0.0) / np.sqrt(2.0))


def bessel3_cdf(r: float, x):
    """CDF of X_r for a 3-dimensional Bessel process from 0 (Maxwell law with scale sqrt(r))"""
    return stats.maxwell.cdf(x, scale=np.sqrt(r))


def rayleigh_cdf(x):
    """CDF of the Brownian meander endpoint X_1"""
    return stats.rayleigh.cdf(x)
