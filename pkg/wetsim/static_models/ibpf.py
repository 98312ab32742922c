"""
Verifier of the discrete integration-by-parts formula of the strip wetting measure

    E[d_h f] = sum_i h_i ( int_0^a e^{phi_a(b)} d/db sigma_i(f | b) db - sigma_i(f | a) )
               - E[f sum_i phi_i (h_{i+1} + h_{i-1} - 2 h_i)],    h_0 = 0, h_{N+1} = h_N,

where sigma_i(f | b) integrates f against the measure with site i pinned at b and its own strip factor
removed. The boundary integral equals E[(d_i f - f d_i H_gauss) 1{phi_i <= a}] and sigma_i(f | a) equals the
site-i marginal density at a times E[f | phi_i = a], which is what the Monte Carlo variant estimates.
"""
import itertools
from typing import Callable, Dict, List, Sequence, Union

import numpy as np
from scipy import integrate

from wetsim.constants import K_SE, MIN_EFFECTIVE_SAMPLE_SIZE
from wetsim.core.models import SeedSpec
from wetsim.exceptions import UnreliableEstimateWarning, UnsupportedLawException
from wetsim.log import Loggers
from wetsim.static_models.gibbs import sample_strip_chains
from wetsim.static_models.models import ConditionalSliceEstimate, IbpfReport, StripPotential
from wetsim.stats.models import Estimate
from wetsim.utils.utility import emit_warning

logger = Loggers.get_named_logger("WETSIM_IBPF")

_UPPER = 20.0
_MAX_CHAINS = 10_000


class TestFunctional:
    """Smooth bounded functional of a field with its gradient, both acting on arrays of shape (..., n)"""
    __test__ = False

    def __init__(self, f_id: str, value: Callable[[np.ndarray], np.ndarray],
                 gradient: Callable[[np.ndarray], np.ndarray]):
        """Functional initializer"""
        self.f_id = f_id
        self.value = value
        self.gradient = gradient


def _exp_sum_gradient(phi):
    return -np.asarray(np.exp(-phi.sum(axis=-1)))[..., None] * np.ones_like(phi)


def _gauss_first_gradient(phi):
    grad = np.zeros_like(phi)
    grad[..., 0] = -2.0 * phi[..., 0] * np.exp(-phi[..., 0] ** 2)
    return grad


def _rational_last_gradient(phi):
    grad = np.zeros_like(phi)
    grad[..., -1] = -2.0 * phi[..., -1] / (1.0 + phi[..., -1] ** 2) ** 2
    return grad


FUNCTIONALS: Dict[str, TestFunctional] = {
    "exp-sum": TestFunctional("exp-sum", lambda phi: np.exp(-phi.sum(axis=-1)), _exp_sum_gradient),
    "gauss-first": TestFunctional("gauss-first", lambda phi: np.exp(-phi[..., 0] ** 2), _gauss_first_gradient),
    "rational-last": TestFunctional("rational-last", lambda phi: 1.0 / (1.0 + phi[..., -1] ** 2),
                                    _rational_last_gradient),
}


def get_functional(f: Union[str, TestFunctional]) -> TestFunctional:
    if isinstance(f, TestFunctional):
        return f
    if f not in FUNCTIONALS:
        raise UnsupportedLawException(f"unknown test functional '{f}', known: {sorted(FUNCTIONALS)}")
    return FUNCTIONALS[f]


def gaussian_gradient(phi: np.ndarray) -> np.ndarray:
    """d_i of sum_k (phi_k - phi_{k-1})^2 / 2 with phi_0 = 0 and a free right end"""
    phi = np.asarray(phi, dtype=float)
    steps = np.diff(phi, axis=-1, prepend=0.0)
    following = np.concatenate([steps[..., 1:], np.zeros(phi.shape[:-1] + (1,))], axis=-1)
    return steps - following


def free_end_laplacian(h: Sequence[float]) -> np.ndarray:
    """h_{i+1} + h_{i-1} - 2 h_i with h_0 = 0 and h_{N+1} = h_N"""
    h = np.asarray(h, dtype=float)
    padded = np.concatenate([[0.0], h, h[-1:]])
    return padded[2:] + padded[:-2] - 2.0 * h


def _log_density(phi: np.ndarray, pot: StripPotential) -> np.ndarray:
    steps = np.diff(phi, axis=-1, prepend=0.0)
    return -0.5 * np.sum(steps ** 2, axis=-1) + np.sum(pot.value(phi), axis=-1)


def _check_ibpf_inputs(n: int, pot: StripPotential, h: Sequence[float]) -> np.ndarray:
    pot.require_smooth("ibpf")
    h = np.asarray(h, dtype=float)
    if h.shape != (n,):
        raise UnsupportedLawException(f"direction h needs {n} entries, got {h.shape}")
    return h


def _box_integral(func: Callable[[np.ndarray], float], n: int, segments: List[List[tuple]]) -> float:
    """Integrates func over a union of boxes, one (lower, upper) list per coordinate"""
    total = 0.0
    for cell in itertools.product(*segments):
        if n == 1:
            total += integrate.quad(lambda x: func(np.array([x])), *cell[0], epsabs=1e-15, epsrel=1e-13,
                                    limit=200)[0]
        else:
            (x_lo, x_hi), (y_lo, y_hi) = cell
            total += integrate.dblquad(lambda y, x: func(np.array([x, y])), x_lo, x_hi, y_lo, y_hi,
                                       epsabs=1e-12, epsrel=1e-10)[0]
    return total


def ibpf_report(n: int, pot: StripPotential, f: Union[str, TestFunctional], h: Sequence[float]) -> IbpfReport:
    """
    Both sides of the integration-by-parts formula by deterministic adaptive quadrature.

    :param n: sites, 1 or 2
    :param pot: smooth-bump potential
    :param f: test functional or its registry id
    :param h: direction
    :return: report with residual |lhs - rhs| / (1 + |lhs|)
    """
    h = _check_ibpf_inputs(n, pot, h)
    if n not in (1, 2):
        raise UnsupportedLawException(f"quadrature IbPF supports n in {{1, 2}}, got {n}; use ibpf_residual_mc")
    functional = get_functional(f)
    laplacian = free_end_laplacian(h)
    full = [[(0.0, pot.a), (pot.a, _UPPER)]] * n

    def density(phi):
        return float(np.exp(_log_density(phi, pot)))

    mass = _box_integral(density, n, full)
    lhs = _box_integral(lambda phi: float(functional.gradient(phi) @ h) * density(phi), n, full) / mass
    laplacian_term = _box_integral(
        lambda phi: float(functional.value(phi)) * float(phi @ laplacian) * density(phi), n, full,
    ) / mass
    rhs = -laplacian_term
    for site in np.flatnonzero(h):
        def boundary_integrand(phi, site=site):
            drift = functional.gradient(phi)[site] - functional.value(phi) * gaussian_gradient(phi)[site]
            return float(drift) * density(phi)

        strip = [[(0.0, pot.a)] if i == site else full[i] for i in range(n)]
        boundary = _box_integral(boundary_integrand, n, strip) / mass

        def pinned(others, site=site):
            phi = np.insert(others, site, pot.a)
            return float(functional.value(phi)) * density(phi)

        if n == 1:
            slice_value = pinned(np.zeros(0)) / mass
        else:
            slice_value = _box_integral(pinned, 1, [full[0]]) / mass
        rhs += h[site] * (boundary - slice_value)
    residual = abs(lhs - rhs) / (1.0 + abs(lhs))
    logger.debug(f"IbPF n={n} f={functional.f_id} h={h.tolist()}: lhs={lhs:.12g} rhs={rhs:.12g}")
    return IbpfReport(n=n, potential=pot, f_id=functional.f_id, h=h.tolist(), lhs=lhs, rhs=rhs, residual=residual)


def ibpf_residual(n: int, pot: StripPotential, f: Union[str, TestFunctional], h: Sequence[float]) -> float:
    """
    Relative residual |lhs - rhs| / (1 + |lhs|) of the integration-by-parts formula by quadrature.

    :param n: sites, 1 or 2
    :param pot: smooth-bump potential
    :param f: test functional or registry id
    :param h: direction
    :return: residual
    """
    return ibpf_report(n, pot, f, h).residual


def _gaussian_kernel(u: np.ndarray, bandwidth: float) -> np.ndarray:
    return np.exp(-0.5 * (u / bandwidth) ** 2) / (np.sqrt(2.0 * np.pi) * bandwidth)


def conditional_slice(samples: np.ndarray, values: np.ndarray, site: int, level: float,
                      bandwidth: float) -> ConditionalSliceEstimate:
    """
    Kernel-smoothed sigma_i(f | b) = E[f K_w(phi_i - b)] from equilibrium samples.

    :param samples: states of shape (chains, kept, n)
    :param values: f at the states, shape (chains, kept)
    :param site: 0-based site
    :param level: level b
    :param bandwidth: kernel width w
    :return: slice estimate with SE from chain means; unreliable when the kernel ESS is below the floor
    """
    kernel = _gaussian_kernel(samples[..., site] - level, bandwidth)
    ess = float(np.sum(kernel) ** 2 / np.sum(kernel ** 2)) if np.any(kernel > 0) else 0.0
    reliable = ess >= MIN_EFFECTIVE_SAMPLE_SIZE
    if not reliable:
        emit_warning(logger, f"slice of site {site + 1} at b={level:.4g}: effective sample size {ess:.1f}",
                     UnreliableEstimateWarning)
    return ConditionalSliceEstimate(site=site + 1, level=level, value=_chain_estimate(values * kernel), ess=ess,
                                    reliable=reliable)


def _chain_estimate(per_sample: np.ndarray) -> Estimate:
    """Estimate of the mean of a (chains, kept) array, SE from independent chain means"""
    if per_sample.shape[0] > 1:
        estimate = Estimate.from_samples(per_sample.mean(axis=1))
        return Estimate(mean=estimate.mean, se=estimate.se, n=per_sample.size)
    return Estimate.from_batch_means(per_sample[0])


def ibpf_report_mc(n: int, pot: StripPotential, f: Union[str, TestFunctional], h: Sequence[float], samples: int,
                   seed: SeedSpec, bandwidth: float = None) -> IbpfReport:
    """
    Monte Carlo integration-by-parts check from strip Gibbs samples.

    :param n: sites
    :param pot: smooth-bump potential
    :param f: test functional or registry id
    :param h: direction
    :param samples: total kept samples
    :param seed: master seed
    :param bandwidth: slice kernel width, defaults to min(0.3 samples^(-1/5), a / 4)
    :return: report whose residual is the signed estimate of lhs - rhs with its SE
    """
    h = _check_ibpf_inputs(n, pot, h)
    functional = get_functional(f)
    bandwidth = min(0.3 * samples ** -0.2, pot.a / 4.0) if bandwidth is None else bandwidth
    chains = int(np.clip(samples // 100, 1, _MAX_CHAINS))
    kept = -(-samples // chains)
    states = sample_strip_chains(n, pot, chains, kept, seed).samples
    values = functional.value(states)
    gradient = functional.gradient(states)
    drift = gradient - values[..., None] * gaussian_gradient(states)

    lhs_terms = gradient @ h
    rhs_terms = -values * (states @ free_end_laplacian(h))
    slices = []
    for site in np.flatnonzero(h):
        at_edge = conditional_slice(states, values, site, pot.a, bandwidth)
        slices.append(conditional_slice(states, values, site, 0.5 * pot.a, bandwidth))
        slices.append(at_edge)
        kernel = _gaussian_kernel(states[..., site] - pot.a, bandwidth)
        rhs_terms = rhs_terms + h[site] * (drift[..., site] * (states[..., site] <= pot.a) - values * kernel)
    lhs, rhs = _chain_estimate(lhs_terms), _chain_estimate(rhs_terms)
    difference = _chain_estimate(lhs_terms - rhs_terms)
    logger.info(f"IbPF MC n={n} f={functional.f_id}: lhs-rhs={difference.mean:.3g} +- {difference.se:.3g} "
                f"({K_SE:g} SE rule), bandwidth {bandwidth:.3g}")
    return IbpfReport(n=n, potential=pot, f_id=functional.f_id, h=h.tolist(), lhs=lhs.mean, rhs=rhs.mean,
                      residual=difference.mean, se=difference.se, slices=[s.dict() for s in slices])


def ibpf_residual_mc(n: int, pot: StripPotential, f: Union[str, TestFunctional], h: Sequence[float], samples: int,
                     seed: SeedSpec) -> Estimate:
    """
    Monte Carlo estimate of lhs - rhs of the integration-by-parts formula.

    :param n: sites
    :param pot: smooth-bump potential
    :param f: test functional or registry id
    :param h: direction
    :param samples: kept Gibbs samples
    :param seed: master seed
    :return: signed residual estimate with its standard error
    """
    report = ibpf_report_mc(n, pot, f, h, samples, seed)
    return Estimate(mean=report.residual, se=report.se, n=samples)
