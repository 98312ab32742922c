"""
Local times and change-of-measure weights of continuum paths.

Against the Bessel-3 law from a, the truncated-drift law has density

    E(M)_T = (X_T ^ eta) / X_T * a / (a ^ eta) * exp(L^eta_T / (2 eta)),    a / (a ^ eta) := 1 for a = 0,

and the mollified law replaces L^eta_T by int_0^T rho_eps(X_s - eta) ds. Local times are occupation integrals
of the mollifier kernel, optionally Richardson-extrapolated in the kernel width.
"""
from typing import Tuple

import numpy as np
from scipy import integrate

from wetsim.continuum.models import ContinuumEnsemble, ContinuumPath, GirsanovWeight
from wetsim.continuum.mollifier import MollifierSpec
from wetsim.exceptions import BiasWarning, ConfigurationException, SingularInputException
from wetsim.log import Loggers
from wetsim.utils.utility import emit_warning

logger = Loggers.get_named_logger("WETSIM_WEIGHTS")


def default_kernel_width(dt: float) -> float:
    """Local-time kernel width tied to the path resolution"""
    return 4.0 * np.sqrt(dt)


def richardson_combine(narrow, wide, level: float):
    """
    Extrapolates kernel-width estimates L_w, L_2w to w = 0. Interior levels have an O(w^2) mean bias;
    at the reflecting wall (level <= 0) the occupation density has a kink and the bias is O(w).

    :param narrow: estimate with width w
    :param wide: estimate with width 2w
    :param level: level of the local time
    :return: extrapolated estimate, clipped at 0
    """
    factor = 2.0 if level <= 0 else 4.0
    return np.maximum((factor * np.asarray(narrow) - np.asarray(wide)) / (factor - 1.0), 0.0)


def occupation_integral(x: np.ndarray, dt: float, level: float, width: float) -> np.ndarray:
    """
    Trapezoidal int rho_width(X_s - level) ds along the last axis.

    :param x: path values (..., steps + 1)
    :param dt: grid step
    :param level: level
    :param width: kernel width
    :return: integrals
    """
    return integrate.trapezoid(MollifierSpec(eps=width).rho(np.asarray(x) - level), dx=dt, axis=-1)


def check_kernel_width(dt: float, eps_kernel: float) -> None:
    """Warns when the kernel is narrower than the path resolution"""
    if eps_kernel < np.sqrt(dt):
        emit_warning(logger, f"local-time kernel {eps_kernel:.3g} below sqrt(dt) = {np.sqrt(dt):.3g}", BiasWarning)


def local_time_estimate(path: ContinuumPath, eta: float, eps_kernel: float) -> float:
    """
    Occupation estimate int_0^T rho_eps_kernel(X_s - eta) ds of L^eta_T.

    :param path: stored path
    :param eta: level
    :param eps_kernel: kernel width, at least sqrt(dt) for controlled bias
    :return: nonnegative estimate
    """
    check_kernel_width(path.grid.dt, eps_kernel)
    return float(occupation_integral(path.x, path.grid.dt, eta, eps_kernel))


def local_time_estimate_array(paths: np.ndarray, dt: float, level: float, eps_kernel: float,
                              richardson: bool = True) -> np.ndarray:
    """
    Row-wise local-time estimates of stored paths (replicas, steps + 1).

    :param paths: paths
    :param dt: grid step
    :param level: level
    :param eps_kernel: kernel width
    :param richardson: combine widths w and 2w
    :return: estimates per path
    """
    check_kernel_width(dt, eps_kernel)
    narrow = occupation_integral(paths, dt, level, eps_kernel)
    if not richardson:
        return narrow
    return richardson_combine(narrow, occupation_integral(paths, dt, level, 2.0 * eps_kernel), level)


def richardson_local_time(path: ContinuumPath, eta: float, eps_kernel: float = None) -> float:
    """
    Richardson-extrapolated local time at eta; exactly 0 when the path stays above eta.

    :param path: stored path
    :param eta: level
    :param eps_kernel: kernel width, defaults to 4 sqrt(dt)
    :return: nonnegative estimate
    """
    if np.min(path.x) > eta:
        return 0.0
    width = default_kernel_width(path.grid.dt) if eps_kernel is None else eps_kernel
    return float(local_time_estimate_array(path.x[None], path.grid.dt, eta, width)[0])


def count_crossings(path: ContinuumPath, level: float) -> int:
    """Sign changes of X - level along the grid"""
    shifted = path.x - level
    return int(np.sum(shifted[:-1] * shifted[1:] < 0))


def downcrossings(path: ContinuumPath, level: float, delta: float) -> int:
    """
    Completed downcrossings of [level, level + delta].

    :param path: stored path
    :param level: lower level
    :param delta: band width
    :return: count
    """
    count, above = 0, False
    for value in path.x:
        if value >= level + delta:
            above = True
        elif value <= level and above:
            count += 1
            above = False
    return count


def downcrossing_local_time(path: ContinuumPath, level: float, delta: float) -> float:
    """Downcrossing estimate 2 delta D(level, level + delta) of the local time"""
    return 2.0 * delta * downcrossings(path, level, delta)


def boundary_log_factor(x_end, a: float, eta: float):
    """log((X_T ^ eta) / X_T) + log(a / (a ^ eta)) with the a = 0 convention"""
    x_end = np.asarray(x_end, dtype=float)
    start = np.log(a / min(a, eta)) if a > 0 else 0.0
    return np.log(np.minimum(x_end, eta) / x_end) + start


def _check_endpoint(x_end) -> None:
    if np.any(np.asarray(x_end) <= 0):
        raise SingularInputException("weight needs X_T > 0")


def girsanov_log_weight(path: ContinuumPath, a: float, eta: float, eps_kernel: float = None) -> GirsanovWeight:
    """
    log E(M)_T of a Bessel-3 path.

    :param path: path simulated under the Bessel-3 law from a
    :param a: start
    :param eta: truncation level
    :param eps_kernel: local-time kernel width
    :return: weight and its components
    """
    _check_endpoint(path.x[-1])
    log_boundary = float(boundary_log_factor(path.x[-1], a, eta))
    occupation_term = richardson_local_time(path, eta, eps_kernel) / (2.0 * eta)
    return GirsanovWeight(log_weight=log_boundary + occupation_term, log_boundary=log_boundary,
                          occupation_term=occupation_term)


def girsanov_log_weights(ensemble: ContinuumEnsemble, a: float, eta: float) -> np.ndarray:
    """
    Ensemble kernel of girsanov_log_weight, from functionals streamed at level eta.

    :param ensemble: Bessel-3 ensemble recorded with level = eta
    :param a: start
    :param eta: truncation level
    :return: log weights
    """
    if ensemble.level is None or not np.isclose(ensemble.level, eta):
        raise ConfigurationException(f"ensemble functionals were recorded at level {ensemble.level}, not {eta}")
    _check_endpoint(ensemble.endpoints)
    return boundary_log_factor(ensemble.endpoints, a, eta) + ensemble.local_time / (2.0 * eta)


def euler_log_likelihood_ratio(x, y, eta: float, dt: float) -> np.ndarray:
    """
    Log density of one symmetrized truncated Euler step x -> y against the exact Bessel-3 transition,

        q(x, y) = phi_dt(y - m) + phi_dt(y + m),    m = x + 1{floor <= eta} dt / floor,  floor = max(x, sqrt dt),
        p(x, y) = (y / x) (phi_dt(y - x) - phi_dt(y + x)),    p(0, y) = (2 y^2 / dt) phi_dt(y).

    Summed along an exact-grid Bessel-3 path it is the density of the truncated Euler chain on the grid,
    so its exponential has mean exactly one for every dt.

    :param x: heights at the start of the step, nonnegative
    :param y: heights at the end of the step, positive
    :param eta: truncation level
    :param dt: grid step
    :return: log q(x, y) - log p(x, y)
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise SingularInputException("transition density ratio needs y > 0")
    floor = np.maximum(x, np.sqrt(dt))
    m = x + np.where(floor <= eta, dt / floor, 0.0)
    safe = np.where(x > 0, x, 1.0)
    log_bessel3 = np.where(x > 0, np.log(y / safe) + np.log(-np.expm1(-2.0 * safe * y / dt)),
                           np.log(2.0 * y * y / dt))
    return ((y - x) ** 2 - (y - m) ** 2) / (2.0 * dt) + np.log1p(np.exp(-2.0 * y * m / dt)) - log_bessel3


def euler_log_weights(ensemble: ContinuumEnsemble, eta: float) -> np.ndarray:
    """
    Grid-exact counterpart of girsanov_log_weights: the summed euler_log_likelihood_ratio streamed along
    Bessel-3 paths recorded with level = eta.

    :param ensemble: Bessel-3 ensemble recorded with level = eta
    :param eta: truncation level
    :return: log weights
    """
    if ensemble.euler_log_weight is None or ensemble.level is None or not np.isclose(ensemble.level, eta):
        raise ConfigurationException(f"ensemble carries no Euler likelihood ratio at level {eta}")
    return np.asarray(ensemble.euler_log_weight)


def _check_mollifier(eta: float, m: MollifierSpec) -> None:
    if not m.eps < eta:
        raise ConfigurationException(f"mollifier width {m.eps} must be smaller than eta={eta}")


def mollified_log_weight(path: ContinuumPath, a: float, eta: float, m: MollifierSpec) -> float:
    """
    Unnormalized log density of the mollified law against Bessel-3:
    log boundary factor + (1 / 2 eta) int rho_eps(X_s - eta) ds.

    :param path: Bessel-3 path
    :param a: start
    :param eta: level
    :param m: mollifier with eps < eta
    :return: log weight
    """
    _check_mollifier(eta, m)
    _check_endpoint(path.x[-1])
    occupation = float(occupation_integral(path.x, path.grid.dt, eta, m.eps))
    return float(boundary_log_factor(path.x[-1], a, eta)) + occupation / (2.0 * eta)


def mollified_log_weights(ensemble: ContinuumEnsemble, a: float, eta: float) -> np.ndarray:
    """Ensemble kernel of mollified_log_weight; the ensemble must carry the mollified occupation at eta"""
    if ensemble.occupation is None or ensemble.level is None or not np.isclose(ensemble.level, eta):
        raise ConfigurationException("ensemble has no mollified occupation recorded at this eta")
    _check_endpoint(ensemble.endpoints)
    return boundary_log_factor(ensemble.endpoints, a, eta) + ensemble.occupation / (2.0 * eta)


def occupation_ito_tanaka(path: ContinuumPath, eta: float, m: MollifierSpec) -> Tuple[float, float]:
    """
    Two evaluations of (1/2) int rho_eps(X_s - eta) ds: the direct trapezoidal integral and the Ito-Tanaka
    form R(X_T) - R(X_0) - sum R'(X_k)(X_{k+1} - X_k).

    :param path: path
    :param eta: level
    :param m: mollifier
    :return: (direct, Ito-Tanaka)
    """
    x = path.x
    direct = 0.5 * float(occupation_integral(x, path.grid.dt, eta, m.eps))
    ito = float(m.primitive(x[-1], eta) - m.primitive(x[0], eta) - np.sum(m.primitive_prime(x[:-1], eta) * np.diff(x)))
    return direct, ito


def novikov_bracket(path: ContinuumPath, eta: float, m: MollifierSpec) -> float:
    """(4 / eta^2) int R'(X_s)^2 ds, bounded by 4 T / eta^2"""
    return float(4.0 / eta ** 2 * integrate.trapezoid(m.primitive_prime(path.x, eta) ** 2, dx=path.grid.dt))
