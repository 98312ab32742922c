"""
Systematic-scan Gibbs samplers for the strip wetting measure and the delta-pinning measure.

Site i of a field of N sites sees the Gaussian factor exp(-(x - m_i)^2 / (2 s_i^2)) with
(m_i, s_i^2) = ((phi_{i-1} + phi_{i+1}) / 2, 1/2) inside and (phi_{N-1}, 1) at the free endpoint, phi_0 = 0.
Kernels work on ensembles of shape (replicas, N) and update every replica at once.
"""
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from wetsim.constants import GIBBS_BURN_IN_FACTOR, GIBBS_THIN_FACTOR
from wetsim.core.models import LatticeField, SeedSpec
from wetsim.core.random import RandomStream, random_stream
from wetsim.exceptions import InvalidFieldException
from wetsim.log import Loggers
from wetsim.static_models.models import ChainSamples, PinningParams, StripPotential
from wetsim.stats.models import Estimate
from wetsim.stats.verdicts import integrated_autocorrelation_time
from wetsim.utils.parallel import ReplicaExecutor

logger = Loggers.get_named_logger("WETSIM_GIBBS")

SweepKernel = Callable[[np.ndarray, RandomStream], np.ndarray]

# heights above this carry no mass under any target (Gaussian tails)
_QUADRATURE_UPPER = 40.0


def check_heights(values: np.ndarray) -> None:
    if np.any(~(values >= 0)):
        raise InvalidFieldException("Gibbs samplers need nonnegative starting heights")


def conditional_moments(values: np.ndarray, site: int) -> Tuple[np.ndarray, float]:
    """
    Mean and standard deviation of the Gaussian factor of one site.

    :param values: heights of shape (replicas, N)
    :param site: 0-based site index
    :return: (means per replica, standard deviation)
    """
    n = values.shape[-1]
    left = values[:, site - 1] if site > 0 else np.zeros(values.shape[0])
    if site == n - 1:
        return left, 1.0
    return 0.5 * (left + values[:, site + 1]), np.sqrt(0.5)


def truncated_normal(m: np.ndarray, sigma: float, stream: RandomStream) -> np.ndarray:
    """
    Draws N(m, sigma^2) conditioned on [0, inf) by inversion in log space.

    :param m: means
    :param sigma: standard deviation
    :param stream: random stream
    :return: nonnegative draws
    """
    log_u = np.log1p(-stream.uniform(np.shape(m)))
    z = -special.ndtri_exp(log_u + special.log_ndtr(m / sigma))
    return np.maximum(m + sigma * z, 0.0)


def strip_acceptance_log_probability(x: np.ndarray, pot: StripPotential) -> np.ndarray:
    """log acceptance of the rejection step, phi_a(x) - max(beta, 0) <= 0"""
    return pot.value(x) - pot.max_value


def _strip_site_draw(m: np.ndarray, sigma: float, pot: StripPotential, stream: RandomStream) -> np.ndarray:
    out = np.empty_like(m)
    pending = np.arange(m.size)
    while pending.size:
        x = truncated_normal(m[pending], sigma, stream)
        accept = np.log1p(-stream.uniform(pending.size)) <= strip_acceptance_log_probability(x, pot)
        out[pending[accept]] = x[accept]
        pending = pending[~accept]
    return out


def pinning_atom_probability(m: np.ndarray, sigma: float, beta: float) -> np.ndarray:
    """
    Mass of the atom at 0 in the delta-pinning site conditional:
    e^beta g(0) / (e^beta g(0) + int_0^inf g), g(x) = exp(-(x - m)^2 / (2 sigma^2)).

    :param m: means
    :param sigma: standard deviation
    :param beta: pinning strength
    :return: atom probabilities
    """
    m = np.asarray(m, dtype=float)
    log_atom = beta - m ** 2 / (2.0 * sigma ** 2)
    log_continuous = np.log(sigma * np.sqrt(2.0 * np.pi)) + special.log_ndtr(m / sigma)
    return special.expit(log_atom - log_continuous)


def sweep_strip_ensemble(values: np.ndarray, pot: StripPotential, stream: RandomStream) -> np.ndarray:
    """
    One systematic-scan sweep of the strip measure over an ensemble.

    :param values: heights of shape (replicas, N)
    :param pot: smooth strip potential
    :param stream: random stream
    :return: new heights
    """
    pot.require_smooth("gibbs_sweep_strip")
    values = np.array(values, dtype=float)
    for site in range(values.shape[-1]):
        m, sigma = conditional_moments(values, site)
        values[:, site] = _strip_site_draw(m, sigma, pot, stream)
    return values


def sweep_pinning_ensemble(values: np.ndarray, beta: float, stream: RandomStream) -> np.ndarray:
    """
    One systematic-scan sweep of the delta-pinning measure over an ensemble.

    :param values: heights of shape (replicas, N)
    :param beta: pinning strength
    :param stream: random stream
    :return: new heights, exact zeros at pinned sites
    """
    values = np.array(values, dtype=float)
    for site in range(values.shape[-1]):
        m, sigma = conditional_moments(values, site)
        pinned = stream.uniform(m.size) < pinning_atom_probability(m, sigma, beta)
        values[:, site] = np.where(pinned, 0.0, truncated_normal(m, sigma, stream))
    return values


def gibbs_sweep_strip(field: LatticeField, pot: StripPotential, seed: SeedSpec) -> LatticeField:
    """
    One Gibbs sweep targeting the strip wetting measure.

    :param field: nonnegative starting field
    :param pot: smooth-bump strip potential
    :param seed: stream seed
    :return: swept field
    """
    pot.require_smooth("gibbs_sweep_strip")
    check_heights(field.values)
    return LatticeField.from_values(sweep_strip_ensemble(field.values[None], pot, random_stream(seed))[0])


def gibbs_sweep_delta_pinning(field: LatticeField, params: PinningParams, seed: SeedSpec) -> LatticeField:
    """
    One Gibbs sweep targeting the delta-pinning measure.

    :param field: nonnegative starting field
    :param params: pinning parameters
    :param seed: stream seed
    :return: swept field
    """
    check_heights(field.values)
    return LatticeField.from_values(sweep_pinning_ensemble(field.values[None], params.beta, random_stream(seed))[0])


def reflected_walk_start(n: int, chains: int, stream: RandomStream) -> np.ndarray:
    """Starting heights |S_i| of a Gaussian random walk, shape (chains, n)"""
    return np.abs(np.cumsum(stream.normal((chains, n)), axis=1))


def run_chains(
        n: int,
        sweep: SweepKernel,
        chains: int,
        kept: int,
        stream: RandomStream,
        burn_in: Optional[int] = None,
        thin: Optional[int] = None,
        init: Optional[np.ndarray] = None,
) -> ChainSamples:
    """
    Runs independent chains side by side and keeps thinned states after burn-in.

    :param n: sites
    :param sweep: ensemble sweep kernel
    :param chains: number of chains
    :param kept: kept states per chain
    :param stream: random stream
    :param burn_in: sweeps discarded first, defaults to 10 N
    :param thin: sweeps between kept states, defaults to N
    :param init: starting heights of shape (chains, n), defaults to a reflected random walk
    :return: chain samples
    """
    burn_in = GIBBS_BURN_IN_FACTOR * n if burn_in is None else burn_in
    thin = max(GIBBS_THIN_FACTOR * n, 1) if thin is None else thin
    values = reflected_walk_start(n, chains, stream) if init is None else np.array(init, dtype=float)
    check_heights(values)
    for _ in range(burn_in):
        values = sweep(values, stream)
    samples = np.empty((chains, kept, n))
    for index in range(kept):
        for _ in range(thin):
            values = sweep(values, stream)
        samples[:, index] = values
    return ChainSamples(samples=samples, burn_in=burn_in, thin=thin)


def _parallel_chains(n: int, sweep: SweepKernel, chains: int, kept: int, seed: SeedSpec,
                     burn_in: Optional[int], thin: Optional[int]) -> ChainSamples:
    def task(size: int, chunk_seed: SeedSpec) -> ChainSamples:
        return run_chains(n, sweep, size, kept, random_stream(chunk_seed), burn_in=burn_in, thin=thin)

    parts = ReplicaExecutor.get_instance().map_chunks(task, chains, seed)
    samples = np.concatenate([part.samples for part in parts], axis=0)
    tau = integrated_autocorrelation_time(samples[:, :, -1].mean(axis=0))
    logger.debug(f"{chains} chains x {kept} kept, N={n}, autocorrelation time {tau:.2f} (thinned units)")
    return ChainSamples(samples=samples, burn_in=parts[0].burn_in, thin=parts[0].thin, autocorrelation_time=tau)


def sample_strip_chains(n: int, pot: StripPotential, chains: int, kept: int, seed: SeedSpec,
                        burn_in: Optional[int] = None, thin: Optional[int] = None) -> ChainSamples:
    """
    Replica-parallel strip-measure chains.

    :param n: sites
    :param pot: smooth strip potential
    :param chains: independent chains
    :param kept: kept states per chain
    :param seed: master seed; chunks derive their own streams
    :param burn_in: burn-in sweeps, defaults to 10 N
    :param thin: thinning, defaults to N
    :return: chain samples
    """
    pot.require_smooth("strip Gibbs chains")
    return _parallel_chains(n, lambda values, stream: sweep_strip_ensemble(values, pot, stream),
                            chains, kept, seed, burn_in, thin)


def sample_pinning_chains(params: PinningParams, chains: int, kept: int, seed: SeedSpec,
                          burn_in: Optional[int] = None, thin: Optional[int] = None) -> ChainSamples:
    """Replica-parallel delta-pinning chains, see sample_strip_chains"""
    return _parallel_chains(params.n, lambda values, stream: sweep_pinning_ensemble(values, params.beta, stream),
                            chains, kept, seed, burn_in, thin)


def zero_fraction(params: PinningParams, chains: int, kept: int, seed: SeedSpec) -> Estimate:
    """
    Mean fraction of exactly-zero heights under the delta-pinning measure, SE from per-chain means.

    :param params: pinning parameters
    :param chains: independent chains
    :param kept: kept states per chain
    :param seed: seed
    :return: estimate
    """
    samples = sample_pinning_chains(params, chains, kept, seed).samples
    return Estimate.from_samples((samples == 0.0).mean(axis=(1, 2)))


def pinning_beta_scan(n: int, betas: List[float], chains: int, kept: int,
                      seed: SeedSpec) -> List[Tuple[float, Estimate]]:
    """
    Zero fraction of the delta-pinning measure across pinning strengths (exploratory scan around beta_c).

    :param n: sites
    :param betas: pinning strengths
    :param chains: chains per strength
    :param kept: kept states per chain
    :param seed: seed, one label per strength
    :return: (beta, zero fraction) pairs in input order
    """
    return [
        (beta, zero_fraction(PinningParams(beta=beta, n=n), chains, kept, seed.derive(stream_label=f"beta={beta!r}")))
        for beta in betas
    ]


def strip_kernel_invariance_error(pot: StripPotential) -> float:
    """
    L1 distance between the N = 1 strip density p and pK, with K the transition density of one sweep
    (truncated Gaussian proposal accepted with probability exp(phi_a - max(beta, 0))), by quadrature.

    :param pot: smooth strip potential
    :return: L1 error
    """
    pot.require_smooth("strip kernel invariance")
    points = [pot.a]

    def quad(func, lower=0.0):
        return integrate.quad(func, lower, _QUADRATURE_UPPER, points=points, epsabs=1e-14, epsrel=1e-12, limit=200)[0]

    def target(x):
        return np.exp(-0.5 * x * x + float(pot.value(x)))

    mass = quad(target)
    mean, sigma = conditional_moments(np.zeros((1, 1)), 0)

    def proposal(y):
        return float(np.exp(-0.5 * ((y - mean[0]) / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
                     / special.ndtr(mean[0] / sigma))

    acceptance = quad(lambda y: proposal(y) * np.exp(float(strip_acceptance_log_probability(y, pot))))

    def kernel(x, y):
        # one site without neighbours: the conditional ignores the current height x
        return proposal(y) * np.exp(float(strip_acceptance_log_probability(y, pot))) / acceptance

    def transported(y):
        return quad(lambda x: kernel(x, y) * target(x) / mass)

    return quad(lambda y: abs(transported(y) - target(y) / mass))


def pinning_kernel_invariance_error(beta: float) -> float:
    """
    L1 distance (atom plus density) between the N = 1 delta-pinning law and its image under one sweep.

    :param beta: pinning strength
    :return: L1 error
    """
    mean, sigma = conditional_moments(np.zeros((1, 1)), 0)
    atom = float(pinning_atom_probability(mean, sigma, beta)[0])
    gaussian_mass = integrate.quad(lambda y: np.exp(-0.5 * y * y), 0.0, _QUADRATURE_UPPER, epsabs=1e-14)[0]
    total = np.exp(beta) + gaussian_mass
    target_atom = np.exp(beta) / total

    def kernel_density(y):
        return (1.0 - atom) * np.exp(-0.5 * ((y - mean[0]) / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi)) \
            / special.ndtr(mean[0] / sigma)

    continuous = integrate.quad(lambda y: abs(kernel_density(y) - np.exp(-0.5 * y * y) / total),
                                0.0, _QUADRATURE_UPPER, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return abs(atom - target_atom) + continuous
