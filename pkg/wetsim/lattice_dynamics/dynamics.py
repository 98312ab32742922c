"""
Projected Euler integration of the reflected gradient system

    dX_i = -d_i H_N(X) dt + sqrt(2) dW_i + d ell_i,    X_i >= 0,

whose invariant law is the strip wetting measure, and the diffusive rescaling Y_t = Phi_N(X(N^2 t)).
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from wetsim.constants import DEFAULT_MICRO_STEP, GIBBS_BURN_IN_FACTOR, STABILITY_RATIO
from wetsim.core.models import LatticeField, SeedSpec
from wetsim.core.random import RandomStream, random_stream
from wetsim.exceptions import ConfigurationException, NonEquilibriumWarning, StabilityWarning
from wetsim.lattice_dynamics.models import DynamicsState, RescaledEnsemble, RescaledTrajectory
from wetsim.log import Loggers
from wetsim.static_models.gibbs import run_chains, sweep_strip_ensemble
from wetsim.static_models.ibpf import gaussian_gradient
from wetsim.static_models.models import StripPotential
from wetsim.utils.parallel import ReplicaExecutor
from wetsim.utils.utility import emit_warning

logger = Loggers.get_named_logger("WETSIM_LATTICE")


def grad_potential_array(values: np.ndarray, pot: StripPotential) -> np.ndarray:
    """Ensemble kernel of grad_potential for heights of shape (..., N)"""
    pot.require_smooth("grad_potential")
    return gaussian_gradient(values) - pot.derivative(values)


def grad_potential(field: LatticeField, pot: StripPotential) -> np.ndarray:
    """
    Gradient of H_N: (2 phi_i - phi_{i-1} - phi_{i+1}) - phi_a'(phi_i) inside, (phi_N - phi_{N-1}) - phi_a'(phi_N)
    at the free end, phi_0 = 0.

    :param field: lattice field
    :param pot: smooth-bump potential
    :return: array of N partial derivatives
    """
    return grad_potential_array(field.values, pot)


def projected_euler(values: np.ndarray, pot: StripPotential, dt: float,
                    noise: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    One projected Euler step for an ensemble.

    :param values: heights (..., N)
    :param pot: smooth potential
    :param dt: step
    :param noise: standard normal variates of the same shape
    :return: (new heights, reflection increments, stability flag)
    """
    drift = grad_potential_array(values, pot) * dt
    unstable = bool(np.max(np.abs(drift), initial=0.0) > STABILITY_RATIO * np.sqrt(2.0 * dt))
    trial = values - drift + np.sqrt(2.0 * dt) * noise
    return np.maximum(trial, 0.0), np.maximum(-trial, 0.0), unstable


def step_reflected_system(state: DynamicsState, pot: StripPotential, dt: float, seed: SeedSpec,
                          noise: Optional[np.ndarray] = None) -> DynamicsState:
    """
    One projected Euler step x_i <- max(x_i - d_i H dt + sqrt(2 dt) xi_i, 0), ell_i += max(-x~_i, 0).

    :param state: current state
    :param pot: smooth-bump potential
    :param dt: positive step
    :param seed: stream seed of this step
    :param noise: test hook replacing the standard normal variates (zeros give pure gradient descent)
    :return: next state
    """
    if dt <= 0:
        raise ConfigurationException(f"dt must be positive, got {dt}")
    xi = random_stream(seed).normal(state.x.n) if noise is None else np.asarray(noise, dtype=float)
    values, reflection, unstable = projected_euler(state.x.values, pot, dt, xi)
    if unstable:
        emit_warning(logger, f"drift step exceeds {STABILITY_RATIO:g} noise scales at dt={dt:.3g}", StabilityWarning)
    return DynamicsState(
        x=LatticeField.from_values(values),
        ell=state.ell + reflection,
        t=state.t + dt,
        contact=state.contact + float(np.sum(values * reflection)),
    )


def record_steps(n: int, obs_times: Sequence[float], dt_micro: Optional[float] = None) -> Tuple[float, List[int]]:
    """
    Microscopic Euler step dt_micro * N^2 and the step counts at which observation times are reached.

    :param n: sites
    :param obs_times: nondecreasing macroscopic observation times
    :param dt_micro: integration step in macroscopic time, defaults to DEFAULT_MICRO_STEP / N^2;
        dt_micro * N^2 must not exceed the smallest positive observation spacing
    :return: (microscopic step, step counts)
    """
    dt_micro = DEFAULT_MICRO_STEP / n ** 2 if dt_micro is None else dt_micro
    if not dt_micro > 0:
        raise ConfigurationException(f"dt_micro must be positive, got {dt_micro}")
    micro_step = dt_micro * n ** 2
    times = np.asarray(obs_times, dtype=float)
    if times.size == 0 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ConfigurationException("obs_times must be nonempty, nonnegative and sorted")
    gaps = np.diff(times)
    if gaps.size and np.min(gaps[gaps > 0], initial=np.inf) < micro_step:
        raise ConfigurationException(f"observation spacing below dt_micro * N^2 = {micro_step:.3g}")
    return micro_step, [int(round(t / dt_micro)) for t in times]


def integrate_ensemble(values: np.ndarray, pot: StripPotential, micro_step: float, steps: Sequence[int],
                       stream: RandomStream) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Integrates an ensemble in microscopic time and records heights at the given step counts.

    :param values: starting heights (replicas, N)
    :param pot: smooth potential
    :param micro_step: Euler step in microscopic time
    :param steps: nondecreasing step counts to record at
    :param stream: stream, one normal block per step
    :return: (records (replicas, len(steps), N), final local times, contact sum)
    """
    values = np.array(values, dtype=float)
    ell = np.zeros_like(values)
    contact = 0.0
    records = np.empty((values.shape[0], len(steps), values.shape[1]))
    done = 0
    warned = False
    for index, target in enumerate(steps):
        while done < target:
            values, reflection, unstable = projected_euler(values, pot, micro_step, stream.normal(values.shape))
            ell += reflection
            contact += float(np.sum(values * reflection))
            done += 1
            if unstable and not warned:
                emit_warning(logger, f"drift step exceeds {STABILITY_RATIO:g} noise scales", StabilityWarning)
                warned = True
        records[:, index] = values
    return records, ell, contact


def equilibrium_start(n: int, pot: StripPotential, replicas: int, stream: RandomStream,
                      burn_in: Optional[int] = None) -> np.ndarray:
    """
    Equilibrium starting heights from strip Gibbs chains.

    :param n: sites
    :param pot: smooth potential
    :param replicas: chains
    :param stream: random stream
    :param burn_in: sweeps, defaults to max(10 N, N^2)
    :return: heights (replicas, n)
    """
    burn_in = max(GIBBS_BURN_IN_FACTOR * n, n * n) if burn_in is None else burn_in
    chains = run_chains(n, lambda values, s: sweep_strip_ensemble(values, pot, s), replicas, 1, stream,
                        burn_in=burn_in, thin=1)
    return chains.samples[:, 0]


def simulate_rescaled_ensemble(
        n: int,
        pot: StripPotential,
        obs_times: Sequence[float],
        replicas: int,
        seed: SeedSpec,
        dt_micro: Optional[float] = None,
        init: Optional[LatticeField] = None,
        equilibrium: bool = False,
) -> RescaledEnsemble:
    """
    Replica-parallel rescaled trajectories Y_t = Phi_N(X(N^2 t)) observed at obs_times.

    :param n: sites
    :param pot: smooth-bump potential
    :param obs_times: sorted macroscopic observation times in [0, T]
    :param replicas: trajectories
    :param seed: master seed
    :param dt_micro: integration step in macroscopic time, defaults to 1e-3 / N^2
    :param init: common starting field; None draws every replica from the strip Gibbs sampler
    :param equilibrium: caller guarantees ``init`` is a sample of the static law
    :return: ensemble of lattice heights at the observation times
    """
    pot.require_smooth("simulate_rescaled")
    micro_step, steps = record_steps(n, obs_times, dt_micro)
    if init is not None:
        init.check_nonnegative()
        if init.n != n:
            raise ConfigurationException(f"init has {init.n} sites, expected {n}")
        if not equilibrium:
            emit_warning(logger, "lattice dynamics started away from equilibrium", NonEquilibriumWarning)

    def task(size: int, chunk_seed: SeedSpec) -> np.ndarray:
        stream = random_stream(chunk_seed)
        start = equilibrium_start(n, pot, size, stream) if init is None else np.tile(init.values, (size, 1))
        return integrate_ensemble(start, pot, micro_step, steps, stream)[0]

    logger.info(f"lattice dynamics N={n}, {replicas} replicas, {steps[-1]} micro steps of {micro_step:g}")
    parts = ReplicaExecutor.get_instance().map_chunks(task, replicas, seed.derive(stream_label="lattice"))
    return RescaledEnsemble(n=n, times=list(obs_times), heights=np.concatenate(parts))


def simulate_rescaled(
        n: int,
        pot: StripPotential,
        T: float,
        obs_times: Sequence[float],
        dt_micro: float,
        init: LatticeField,
        seed: SeedSpec,
        equilibrium: bool = True,
) -> RescaledTrajectory:
    """
    One rescaled trajectory over macroscopic time [0, T].

    :param n: sites
    :param pot: smooth-bump potential
    :param T: horizon, every observation time must lie in [0, T]
    :param obs_times: sorted observation times
    :param dt_micro: integration step in macroscopic time, at most the observation spacing / N^2
    :param init: starting field
    :param seed: stream seed
    :param equilibrium: init was drawn from the static law; False logs a non-equilibrium warning
    :return: rescaled trajectory
    """
    if any(t > T for t in obs_times):
        raise ConfigurationException(f"observation times must lie in [0, {T}]")
    pot.require_smooth("simulate_rescaled")
    init.check_nonnegative()
    if not equilibrium:
        emit_warning(logger, "lattice dynamics started away from equilibrium", NonEquilibriumWarning)
    micro_step, steps = record_steps(n, obs_times, dt_micro)
    records, _, _ = integrate_ensemble(init.values[None], pot, micro_step, steps, random_stream(seed))
    ensemble = RescaledEnsemble(n=n, times=list(obs_times), heights=records)
    return ensemble.trajectory(0)
