"""
Projected explicit finite differences for the reflected SPDE with attraction

    du = 1/2 u'' dt + (1 / 4 eta) rho_eps'(u - eta) dt + dW + d zeta,    u >= 0,  int u d zeta = 0,

on sites x_j = j dx with u(0) = a and a discrete Neumann end at x = 1. Each site gets independent N(0, dt / dx)
noise. The scheme is the Langevin discretization of the density

    exp(-sum (u_j - u_{j-1})^2 / (2 dx) + (dx / 2 eta) sum rho_eps(u_j - eta)) (u_n ^ eta),    u >= 0,

whose continuum counterpart is the mollified law P^{eta, eps}_a; the oracle below samples that law by reweighting
exact Bessel-3 paths.
"""
from typing import Optional, Tuple

import numpy as np

from wetsim.constants import K_SE, KS_THRESHOLD_SPDE
from wetsim.continuum.bessel import simulate_bessel3_ensemble
from wetsim.continuum.models import ContinuumEnsemble
from wetsim.continuum.mollifier import MollifierSpec
from wetsim.core.models import SeedSpec, TimeGrid
from wetsim.core.random import RandomStream, random_stream
from wetsim.exceptions import ConfigurationException, NonEquilibriumWarning
from wetsim.log import Loggers
from wetsim.spde.models import SpdeConfig, SpdeEnsemble, SpdeState
from wetsim.stats.models import Estimate, KsResult
from wetsim.stats.verdicts import effective_sample_size, weighted_ks_distance
from wetsim.utils.parallel import ReplicaExecutor
from wetsim.utils.utility import emit_warning, split_evenly

logger = Loggers.get_named_logger("WETSIM_SPDE")

INIT_ORACLE = "oracle"
INIT_WALL = "wall"
SCHEME_EULER = "euler"
SCHEME_MALA = "mala"


def attraction_drift(u, eta: float, m: MollifierSpec):
    """
    (1 / 4 eta) rho_eps'(u - eta): pushes u towards eta from inside (eta - eps, eta + eps), zero elsewhere.

    :param u: height(s)
    :param eta: attraction level
    :param m: mollifier
    :return: drift, float for scalar input
    """
    drift = m.rho_prime(np.asarray(u, dtype=float) - eta) / (4.0 * eta)
    return float(drift) if np.ndim(drift) == 0 else drift


def spde_drift(u: np.ndarray, cfg: SpdeConfig) -> np.ndarray:
    """
    Drift of every site for fields of shape (..., n_space).

    :param u: fields
    :param cfg: SPDE config
    :return: drift of the same shape
    """
    left = np.concatenate([np.full(u.shape[:-1] + (1,), cfg.a), u[..., :-1]], axis=-1)
    right = np.concatenate([u[..., 1:], u[..., -1:]], axis=-1)
    drift = 0.5 * (left + right - 2.0 * u) / cfg.dx ** 2
    if cfg.attraction:
        drift = drift + attraction_drift(u, cfg.eta, cfg.mollifier)
    if cfg.endpoint_tilt:
        end = u[..., -1]
        floor = np.sqrt(cfg.dt / cfg.dx)
        drift[..., -1] += np.where(end < cfg.eta, 1.0 / np.maximum(end, floor), 0.0) / (2.0 * cfg.dx)
    return drift


def projected_step(u: np.ndarray, cfg: SpdeConfig, noise: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Explicit step followed by the projection on u >= 0.

    :param u: fields (..., n_space)
    :param cfg: SPDE config
    :param noise: N(0, dt / dx) increments of the same shape
    :return: (projected fields, reflection increments, sum of u * d zeta)
    """
    tentative = u + cfg.dt * spde_drift(u, cfg) + noise
    projected = np.maximum(tentative, 0.0)
    reflection = np.maximum(-tentative, 0.0)
    return projected, reflection, float(np.sum(projected * reflection))


def step_spde(state: SpdeState, cfg: SpdeConfig, seed: SeedSpec, noise: np.ndarray = None) -> SpdeState:
    """
    One projected step of the field.

    :param state: current state
    :param cfg: SPDE config, refused outside dt <= dx^2 / 4
    :param seed: seed of this step's noise
    :param noise: explicit N(0, dt / dx) increments, drawn from ``seed`` when omitted
    :return: next state
    """
    cfg.check_stability()
    if state.u.size != cfg.n_space:
        raise ConfigurationException(f"state has {state.u.size} sites, config {cfg.n_space}")
    if noise is None:
        noise = np.sqrt(cfg.dt / cfg.dx) * random_stream(seed).normal(cfg.n_space)
    u, reflection, complementarity = projected_step(state.u, cfg, np.asarray(noise, dtype=float))
    return SpdeState(
        u=u,
        zeta_mass=state.zeta_mass + reflection,
        t=state.t + cfg.dt,
        complementarity=state.complementarity + complementarity,
        clamp_events=state.clamp_events + int(np.count_nonzero(reflection)),
    )


def complementarity_report(state: SpdeState) -> float:
    """sum over steps and sites of u * d zeta accumulated by the run"""
    return state.complementarity


def log_density(u: np.ndarray, cfg: SpdeConfig) -> np.ndarray:
    """
    Unnormalized log density of the discrete invariant law, -inf outside u > 0.

    :param u: fields (..., n_space)
    :param cfg: SPDE config
    :return: log densities
    """
    previous = np.concatenate([np.full(u.shape[:-1] + (1,), cfg.a), u[..., :-1]], axis=-1)
    value = -np.sum((u - previous) ** 2, axis=-1) / (2.0 * cfg.dx)
    if cfg.attraction:
        value = value + cfg.dx / (2.0 * cfg.eta) * np.sum(cfg.mollifier.rho(u - cfg.eta), axis=-1)
    if cfg.endpoint_tilt:
        value = value + np.log(np.minimum(np.maximum(u[..., -1], np.finfo(float).tiny), cfg.eta))
    return np.where(np.all(u > 0, axis=-1), value, -np.inf)


def mala_step(u: np.ndarray, cfg: SpdeConfig, stream: RandomStream) -> Tuple[np.ndarray, np.ndarray]:
    """
    Metropolis-adjusted step: the unprojected Euler move is a proposal accepted against log_density,
    so the discrete invariant law is exact at any dt.

    :param u: fields (replicas, n_space), all positive
    :param cfg: SPDE config
    :param stream: random stream
    :return: (new fields, accepted flags)
    """
    variance = cfg.dt / cfg.dx
    forward_mean = u + cfg.dt * spde_drift(u, cfg)
    proposal = forward_mean + np.sqrt(variance) * stream.normal(u.shape)
    backward_mean = proposal + cfg.dt * spde_drift(np.maximum(proposal, 0.0), cfg)
    log_forward = -np.sum((proposal - forward_mean) ** 2, axis=-1) / (2.0 * variance)
    log_backward = -np.sum((u - backward_mean) ** 2, axis=-1) / (2.0 * variance)
    target = log_density(proposal, cfg)
    log_ratio = np.where(np.isfinite(target), target - log_density(u, cfg) + log_backward - log_forward, -np.inf)
    accepted = np.log(stream.uniform(u.shape[0])) < log_ratio
    return np.where(accepted[:, None], proposal, u), accepted


def oracle_ensemble(cfg: SpdeConfig, replicas: int, seed: SeedSpec, substeps: int = 16) -> ContinuumEnsemble:
    """
    Exact Bessel-3 paths from a on [0, 1] with snapshots at the SPDE sites and the mollified occupation at eta.

    :param cfg: SPDE config
    :param replicas: paths
    :param seed: oracle seed
    :param substeps: path steps per spatial cell
    :return: ensemble functionals
    """
    grid = TimeGrid(t0=0.0, t1=1.0, steps=cfg.n_space * substeps)
    return simulate_bessel3_ensemble(cfg.a, grid, replicas, seed, obs_times=list(cfg.sites), level=cfg.eta,
                                     mollifier=cfg.mollifier)


def oracle_log_weights(ensemble: ContinuumEnsemble, cfg: SpdeConfig) -> np.ndarray:
    """
    Self-normalizable log weights turning Bessel-3 paths into the SPDE's continuum invariant law:
    log((X_1 ^ eta) / X_1) + (1 / 2 eta) int rho_eps(X_s - eta) ds, with either factor dropped when the
    corresponding mechanism is switched off.

    :param ensemble: oracle ensemble
    :param cfg: SPDE config
    :return: log weights up to an additive constant
    """
    end = ensemble.snapshots[:, -1]
    log_weights = -np.log(end)
    if cfg.endpoint_tilt:
        log_weights = log_weights + np.log(np.minimum(end, cfg.eta))
    if cfg.attraction:
        log_weights = log_weights + ensemble.occupation / (2.0 * cfg.eta)
    return log_weights


def oracle_initial_fields(cfg: SpdeConfig, replicas: int, seed: SeedSpec, oracle_replicas: int) -> np.ndarray:
    """
    Near-equilibrium starts: multinomial resampling of oracle paths by their weights.

    :param cfg: SPDE config
    :param replicas: fields to draw
    :param seed: master seed
    :param oracle_replicas: oracle paths to draw from
    :return: fields (replicas, n_space)
    """
    ensemble = oracle_ensemble(cfg, oracle_replicas, seed.derive(stream_label="spde-init-oracle"))
    log_weights = oracle_log_weights(ensemble, cfg)
    weights = np.exp(log_weights - np.max(log_weights))
    picks = random_stream(seed.derive(stream_label="spde-init")).choice(weights.size, replicas, weights / weights.sum())
    return np.maximum(ensemble.snapshots[picks], np.finfo(float).tiny)


def _spde_block(cfg: SpdeConfig, u: np.ndarray, stream: RandomStream, scheme: str, burn_steps: int,
                run_steps: int, stride: int) -> dict:
    size = u.shape[0]
    scale = np.sqrt(cfg.dt / cfg.dx)
    zeta = np.zeros_like(u)
    complementarity, minimum, accepted = 0.0, float(np.min(u)), 0
    samples, inside = [], np.zeros(size)
    for step in range(1, burn_steps + run_steps + 1):
        if scheme == SCHEME_MALA:
            u, flags = mala_step(u, cfg, stream)
            accepted += int(np.count_nonzero(flags))
        else:
            u, reflection, increment = projected_step(u, cfg, scale * stream.normal(u.shape))
            zeta += reflection
            complementarity += increment
        minimum = min(minimum, float(np.min(u)))
        if step > burn_steps:
            inside += np.abs(u[:, -1] - cfg.eta) < cfg.eps
            if (step - burn_steps) % stride == 0:
                samples.append(u[:, -1].copy())
    return dict(final=u, zeta=zeta.sum(axis=1), complementarity=complementarity, minimum=minimum,
                samples=np.stack(samples, axis=1) if samples else np.zeros((size, 0)),
                inside=inside / max(run_steps, 1), accepted=accepted, proposals=size * (burn_steps + run_steps))


def simulate_spde_ensemble(cfg: SpdeConfig, replicas: int, seed: SeedSpec, burn_in: float, duration: float,
                           sample_every: float, init: str = INIT_ORACLE, scheme: str = SCHEME_EULER,
                           oracle_replicas: int = 20000) -> SpdeEnsemble:
    """
    Long run of independent replicas recording u(1) at regular times after a burn-in.

    :param cfg: SPDE config
    :param replicas: independent fields
    :param seed: master seed
    :param burn_in: model time discarded at the start
    :param duration: model time recorded after the burn-in
    :param sample_every: model time between recorded samples of u(1)
    :param init: "oracle" (resampled from the invariant-law oracle) or "wall" (u = a everywhere)
    :param scheme: "euler" (projected) or "mala" (Metropolis-adjusted)
    :param oracle_replicas: oracle paths behind the resampled starts
    :return: ensemble record
    """
    cfg.check_stability()
    if scheme not in (SCHEME_EULER, SCHEME_MALA):
        raise ConfigurationException(f"unknown SPDE scheme '{scheme}'")
    if init == INIT_ORACLE:
        fields = oracle_initial_fields(cfg, replicas, seed, oracle_replicas)
    elif init == INIT_WALL:
        emit_warning(logger, "SPDE replicas start at the wall, far from the invariant law", NonEquilibriumWarning)
        fields = np.full((replicas, cfg.n_space), max(cfg.a, np.finfo(float).tiny))
    else:
        raise ConfigurationException(f"unknown SPDE initial condition '{init}'")
    burn_steps = int(round(burn_in / cfg.dt))
    run_steps = int(round(duration / cfg.dt))
    stride = max(1, int(round(sample_every / cfg.dt)))
    offsets = np.concatenate([[0], np.cumsum(split_evenly(replicas, ReplicaExecutor.get_instance().chunks))])
    logger.info(f"SPDE n_space={cfg.n_space} dt={cfg.dt:.3g} eta={cfg.eta:g} eps={cfg.eps:g} ({scheme}, {init}): "
                f"{replicas} replicas x {burn_steps + run_steps} steps")

    def task(size: int, chunk_seed: SeedSpec) -> dict:
        start = offsets[chunk_seed.replica_index]
        return _spde_block(cfg, fields[start:start + size].copy(), random_stream(chunk_seed), scheme, burn_steps,
                           run_steps, stride)

    parts = ReplicaExecutor.get_instance().map_chunks(task, replicas, seed.derive(stream_label="spde"))
    proposals = sum(part["proposals"] for part in parts)
    return SpdeEnsemble(
        cfg=cfg,
        sample_times=[burn_in + k * stride * cfg.dt for k in range(1, run_steps // stride + 1)],
        endpoint_samples=np.concatenate([part["samples"] for part in parts]),
        strip_fraction=np.concatenate([part["inside"] for part in parts]),
        final=np.concatenate([part["final"] for part in parts]),
        zeta_total=np.concatenate([part["zeta"] for part in parts]),
        complementarity=float(sum(part["complementarity"] for part in parts)),
        minimum=min(part["minimum"] for part in parts),
        acceptance_rate=sum(part["accepted"] for part in parts) / proposals if scheme == SCHEME_MALA else None,
    )


def invariant_law_check(ensemble: SpdeEnsemble, seed: SeedSpec, oracle_replicas: int,
                        threshold: float = KS_THRESHOLD_SPDE) -> KsResult:
    """
    KS distance of the recorded u(1) samples to the self-normalized oracle marginal of X_1.

    :param ensemble: SPDE run
    :param seed: master seed of the oracle
    :param oracle_replicas: oracle paths
    :param threshold: pass threshold
    :return: KS result
    """
    oracle = oracle_ensemble(ensemble.cfg, oracle_replicas, seed.derive(stream_label="spde-oracle"))
    log_weights = oracle_log_weights(oracle, ensemble.cfg)
    logger.info(f"SPDE oracle: {oracle_replicas} paths, ESS {effective_sample_size(log_weights):.0f}")
    return weighted_ks_distance(ensemble.pooled_samples, oracle.snapshots[:, -1], log_weights, threshold)


def attraction_localization(with_attraction: SpdeEnsemble, without_attraction: SpdeEnsemble,
                            k_se: float = K_SE) -> Tuple[bool, Estimate]:
    """
    Compares the time fraction u(1) spends in (eta - eps, eta + eps) with and without the attraction.

    :param with_attraction: run with the mollified attraction
    :param without_attraction: same config with attraction switched off
    :param k_se: standard errors required
    :return: (attraction strictly increases the fraction at k_se, difference estimate)
    """
    difference = Estimate.from_samples(with_attraction.strip_fraction).minus(
        Estimate.from_samples(without_attraction.strip_fraction))
    return bool(difference.mean > k_se * difference.se), difference


def simulate_spde_path(cfg: SpdeConfig, u0, steps: int, seed: SeedSpec,
                       record_every: Optional[int] = None) -> Tuple[SpdeState, list]:
    """
    Sequential run of one field, each step seeded by (seed, step index).

    :param cfg: SPDE config
    :param u0: initial field
    :param steps: number of steps
    :param seed: master seed
    :param record_every: keep every k-th state, None keeps only the last
    :return: (final state, recorded states)
    """
    state = SpdeState.start(u0)
    recorded = []
    for step in range(steps):
        state = step_spde(state, cfg, seed.derive(replica_index=step, stream_label="spde-step"))
        if record_every and (step + 1) % record_every == 0:
            recorded.append(state)
    return state, recorded
