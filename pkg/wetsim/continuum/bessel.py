"""
Truncated-drift Bessel SDE

    dX = 1{X <= eta} / X dt + dB,    X_0 = a >= 0,

its squared process dZ = 2 sqrt(Z) dB + (1 + 2 1{Z <= eta^2}) dt, exact Bessel-3 paths as norms of 3-d Brownian
motions, and common-noise families across eta. Ensembles are stepped in time with streamed functionals, so
memory does not grow with the number of steps.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from wetsim.core.models import SeedSpec, TimeGrid
from wetsim.core.random import RandomStream, random_stream
from wetsim.continuum.models import ContinuumConfig, ContinuumEnsemble, ContinuumPath, CoupledEnsemble
from wetsim.continuum.mollifier import MollifierSpec
from wetsim.continuum.weights import (
    check_kernel_width, count_crossings, default_kernel_width, euler_log_likelihood_ratio, richardson_combine,
    richardson_local_time,
)
from wetsim.exceptions import BiasWarning, ConfigurationException, SingularInputException
from wetsim.log import Loggers
from wetsim.utils.parallel import ReplicaExecutor
from wetsim.utils.utility import emit_warning

logger = Loggers.get_named_logger("WETSIM_CONTINUUM")


def drift_truncated(x: float, eta: float) -> float:
    """
    1 / x inside the strip [0, eta], 0 above it.

    :param x: positive height
    :param eta: truncation level
    :return: drift
    """
    if not x > 0:
        raise SingularInputException(f"truncated drift needs x > 0, got {x}")
    return 1.0 / x if x <= eta else 0.0


def drift_truncated_array(x: np.ndarray, eta: float) -> np.ndarray:
    """Ensemble kernel of drift_truncated for positive x"""
    return np.where(x <= eta, 1.0 / x, 0.0)


def step_truncated_bessel_array(x: np.ndarray, eta: float, dt: float, db: np.ndarray) -> np.ndarray:
    """Symmetrized Euler step |x + drift(max(x, sqrt dt), eta) dt + dB| for an ensemble"""
    floor = np.maximum(x, np.sqrt(dt))
    return np.abs(x + drift_truncated_array(floor, eta) * dt + db)


def step_truncated_bessel(x: float, eta: float, dt: float, dB: float) -> float:
    """
    One symmetrized Euler step of the truncated SDE; the drift is evaluated at max(x, sqrt(dt)).

    :param x: nonnegative height
    :param eta: truncation level
    :param dt: positive step
    :param dB: Brownian increment
    :return: nonnegative next height
    """
    if x < 0 or dt <= 0:
        raise ConfigurationException("step_truncated_bessel needs x >= 0 and dt > 0")
    return float(step_truncated_bessel_array(np.asarray(x, dtype=float), eta, dt, np.asarray(dB, dtype=float)))


def squared_process_step_array(z: np.ndarray, eta: float, dt: float, db: np.ndarray) -> np.ndarray:
    """Symmetrized Euler step |z + (1 + 2 1{z <= eta^2}) dt + 2 sqrt(z) dB| for an ensemble"""
    return np.abs(z + (1.0 + 2.0 * (z <= eta ** 2)) * dt + 2.0 * np.sqrt(z) * db)


def squared_process_step(z: float, eta: float, dt: float, dB: float) -> float:
    """
    One symmetrized Euler step of Z = X^2.

    :param z: nonnegative value
    :param eta: truncation level, 0 gives the squared Bessel-1 process and large values the squared Bessel-3
    :param dt: step
    :param dB: Brownian increment
    :return: nonnegative next value
    """
    if z < 0:
        raise ConfigurationException("squared_process_step needs z >= 0")
    return float(squared_process_step_array(np.asarray(z, dtype=float), eta, dt, np.asarray(dB, dtype=float)))


class FunctionalRecorder:
    """
    Streams path functionals of an ensemble: snapshots, running minimum, crossings of a level, trapezoidal
    occupation integrals for local-time kernels of widths w and 2w, and for a mollifier the Ito-Tanaka sum
    and the bracket integral.
    """

    def __init__(self, x0: np.ndarray, grid: TimeGrid, obs_times: Sequence[float], level: Optional[float] = None,
                 kernel_eps: Optional[float] = None, mollifier: Optional[MollifierSpec] = None):
        """Recorder initializer"""
        self.dt = grid.dt
        self.x0 = np.array(x0, dtype=float)
        self.level = level
        self.mollifier = mollifier
        self.columns = [(grid.index_of(t), column) for column, t in enumerate(obs_times)]
        self.snapshots = np.zeros((self.x0.size, len(self.columns)))
        self.minimum = self.x0.copy()
        self.crossings = np.zeros(self.x0.size, dtype=int)
        self._record(0, self.x0)
        self.kernels: List[MollifierSpec] = []
        if level is None:
            return
        width = default_kernel_width(self.dt) if kernel_eps is None else kernel_eps
        check_kernel_width(self.dt, width)
        self.kernels = [MollifierSpec(eps=width), MollifierSpec(eps=2.0 * width)]
        self.occupations = [np.zeros(self.x0.size) for _ in self.kernels]
        self._kernel_values = [kernel.rho(self.x0 - level) for kernel in self.kernels]
        if mollifier is not None:
            self.occupation = np.zeros(self.x0.size)
            self.ito_sum = np.zeros(self.x0.size)
            self.bracket = np.zeros(self.x0.size)
            self._rho = mollifier.rho(self.x0 - level)
            self._slope = mollifier.primitive_prime(self.x0, level)

    def _record(self, index: int, x: np.ndarray) -> None:
        for step, column in self.columns:
            if step == index:
                self.snapshots[:, column] = x

    def update(self, index: int, x_previous: np.ndarray, x: np.ndarray) -> None:
        """
        Adds the step ending at grid index ``index``.

        :param index: grid index of x
        :param x_previous: values at index - 1
        :param x: values at index
        :return: None
        """
        self._record(index, x)
        np.minimum(self.minimum, x, out=self.minimum)
        if self.level is None:
            return
        self.crossings += (x_previous - self.level) * (x - self.level) < 0
        for k, kernel in enumerate(self.kernels):
            current = kernel.rho(x - self.level)
            self.occupations[k] += 0.5 * self.dt * (self._kernel_values[k] + current)
            self._kernel_values[k] = current
        if self.mollifier is not None:
            rho = self.mollifier.rho(x - self.level)
            slope = self.mollifier.primitive_prime(x, self.level)
            self.occupation += 0.5 * self.dt * (self._rho + rho)
            self.ito_sum += self._slope * (x - x_previous)
            self.bracket += 0.5 * self.dt * (self._slope ** 2 + slope ** 2)
            self._rho, self._slope = rho, slope

    def local_time(self) -> np.ndarray:
        """Richardson-extrapolated occupation density, zero for paths staying above the level"""
        if self.level is None:
            return np.zeros(self.x0.size)
        narrow, wide = self.occupations
        estimate = richardson_combine(narrow, wide, self.level)
        return np.where(self.minimum > self.level, 0.0, estimate)

    def finish(self, x: np.ndarray, a: float, eta: Optional[float], grid: TimeGrid, obs_times: Sequence[float],
               euler_log_weight: Optional[np.ndarray] = None) -> ContinuumEnsemble:
        extras = {} if euler_log_weight is None else dict(euler_log_weight=euler_log_weight)
        if self.mollifier is not None:
            primitive_change = self.mollifier.primitive(x, self.level) - self.mollifier.primitive(self.x0, self.level)
            extras.update(
                occupation=self.occupation,
                occupation_ito=2.0 * (primitive_change - self.ito_sum),
                bracket=4.0 / self.level ** 2 * self.bracket,
            )
        return ContinuumEnsemble(
            a=a, eta=eta, level=self.level, grid=grid, obs_times=list(obs_times), snapshots=self.snapshots,
            endpoints=x, local_time=self.local_time(), minimum=self.minimum, crossings=self.crossings, **extras,
        )


def _concatenate(parts: List[ContinuumEnsemble]) -> ContinuumEnsemble:
    fields = parts[0].dict()
    for name in ("snapshots", "endpoints", "local_time", "minimum", "crossings", "occupation", "occupation_ito",
                 "bracket", "euler_log_weight"):
        if fields[name] is not None:
            fields[name] = np.concatenate([getattr(part, name) for part in parts])
    return ContinuumEnsemble(**fields)


def _truncated_block(cfg: ContinuumConfig, size: int, stream: RandomStream, obs_times: Sequence[float],
                     kernel_eps: Optional[float], mollifier: Optional[MollifierSpec],
                     functionals: bool) -> ContinuumEnsemble:
    grid = cfg.grid
    x = np.full(size, cfg.a)
    level = cfg.eta if functionals else None
    recorder = FunctionalRecorder(x, grid, obs_times, level=level, kernel_eps=kernel_eps,
                                  mollifier=mollifier if functionals else None)
    scale = np.sqrt(grid.dt)
    for index in range(1, grid.steps + 1):
        x_next = step_truncated_bessel_array(x, cfg.eta, grid.dt, scale * stream.normal(size))
        recorder.update(index, x, x_next)
        x = x_next
    return recorder.finish(x, cfg.a, cfg.eta, grid, obs_times)


def simulate_truncated_ensemble(cfg: ContinuumConfig, replicas: int, seed: SeedSpec,
                                obs_times: Sequence[float] = (), kernel_eps: float = None,
                                functionals: bool = True) -> ContinuumEnsemble:
    """
    Replica ensemble of the truncated-drift SDE with streamed functionals at level eta.

    :param cfg: continuum config
    :param replicas: paths
    :param seed: master seed
    :param obs_times: snapshot times; the endpoint is always kept
    :param kernel_eps: local-time kernel width, defaults to 4 sqrt(dt)
    :param functionals: accumulate local time, crossings and occupation integrals at eta
    :return: ensemble functionals
    """
    if not cfg.resolves_strip:
        emit_warning(logger, f"dt={cfg.grid.dt:.3g} exceeds eta^2/10 for eta={cfg.eta:g}", BiasWarning)
    mollifier = MollifierSpec(eps=cfg.eps) if cfg.eps is not None else None
    logger.info(f"truncated Bessel ensemble a={cfg.a:g} eta={cfg.eta:g}: {replicas} paths x {cfg.grid.steps} steps")
    parts = ReplicaExecutor.get_instance().map_chunks(
        lambda size, chunk_seed: _truncated_block(cfg, size, random_stream(chunk_seed), obs_times, kernel_eps,
                                                  mollifier, functionals),
        replicas, seed,
    )
    return _concatenate(parts)


def _bessel3_block(a: float, grid: TimeGrid, size: int, stream: RandomStream, obs_times: Sequence[float],
                   level: Optional[float], kernel_eps: Optional[float],
                   mollifier: Optional[MollifierSpec]) -> ContinuumEnsemble:
    motion = np.zeros((size, 3))
    motion[:, 0] = a
    x = np.full(size, a)
    recorder = FunctionalRecorder(x, grid, obs_times, level=level, kernel_eps=kernel_eps, mollifier=mollifier)
    log_ratio = None if level is None else np.zeros(size)
    scale = np.sqrt(grid.dt)
    for index in range(1, grid.steps + 1):
        motion += scale * stream.normal((size, 3))
        x_next = np.linalg.norm(motion, axis=1)
        recorder.update(index, x, x_next)
        if log_ratio is not None:
            log_ratio += euler_log_likelihood_ratio(x, x_next, level, grid.dt)
        x = x_next
    return recorder.finish(x, a, None, grid, obs_times, euler_log_weight=log_ratio)


def simulate_bessel3_ensemble(a: float, grid: TimeGrid, replicas: int, seed: SeedSpec,
                              obs_times: Sequence[float] = (), level: float = None, kernel_eps: float = None,
                              mollifier: MollifierSpec = None) -> ContinuumEnsemble:
    """
    Exact-grid Bessel-3 paths from a, |(a, 0, 0) + W|, with streamed functionals at ``level``.

    :param a: start
    :param grid: time grid
    :param replicas: paths
    :param seed: master seed
    :param obs_times: snapshot times
    :param level: level of the local time, occupation integrals and Euler likelihood ratio (the truncation level
        eta of a reweighting)
    :param kernel_eps: local-time kernel width, defaults to 4 sqrt(dt)
    :param mollifier: mollifier whose occupation integral, Ito-Tanaka form and bracket are accumulated
    :return: ensemble functionals
    """
    if a < 0:
        raise ConfigurationException("Bessel-3 start must be nonnegative")
    logger.info(f"Bessel-3 ensemble a={a:g}: {replicas} paths x {grid.steps} steps")
    parts = ReplicaExecutor.get_instance().map_chunks(
        lambda size, chunk_seed: _bessel3_block(a, grid, size, random_stream(chunk_seed), obs_times, level,
                                                kernel_eps, mollifier),
        replicas, seed,
    )
    return _concatenate(parts)


def simulate_continuum_path(cfg: ContinuumConfig, seed: SeedSpec, kernel_eps: float = None) -> ContinuumPath:
    """
    One stored path of the truncated SDE.

    :param cfg: continuum config
    :param seed: stream seed
    :param kernel_eps: local-time kernel width
    :return: path with its increments, local time at eta and crossing count
    """
    return simulate_coupled_family([cfg], seed, kernel_eps=kernel_eps)[0]


def simulate_coupled_family(cfgs: List[ContinuumConfig], seed: SeedSpec,
                            kernel_eps: float = None) -> List[ContinuumPath]:
    """
    Paths of several truncation levels driven by the same Brownian increments.

    :param cfgs: configs sharing a and grid, with distinct etas
    :param seed: stream seed
    :param kernel_eps: local-time kernel width
    :return: one path per config, in input order
    """
    grid, a = cfgs[0].grid, cfgs[0].a
    if any(cfg.grid != grid for cfg in cfgs):
        raise ConfigurationException("coupled family needs one common time grid")
    if any(cfg.a != a for cfg in cfgs):
        raise ConfigurationException("coupled family needs one common start a")
    if len({cfg.eta for cfg in cfgs}) != len(cfgs):
        raise ConfigurationException("coupled family needs distinct etas")
    increments = np.sqrt(grid.dt) * random_stream(seed).normal(grid.steps)
    paths = []
    for cfg in cfgs:
        x = np.empty(grid.steps + 1)
        x[0] = a
        for index, db in enumerate(increments):
            x[index + 1] = step_truncated_bessel_array(x[index], cfg.eta, grid.dt, db)
        path = ContinuumPath(grid=grid, x=x, b_increments=increments)
        paths.append(ContinuumPath(
            grid=grid, x=x, b_increments=increments,
            local_time_eta=richardson_local_time(path, cfg.eta, kernel_eps),
            crossings=count_crossings(path, cfg.eta),
        ))
    return paths


def _coupled_block(etas: List[float], a: float, grid: TimeGrid, size: int, stream: RandomStream,
                   obs_times: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.full((len(etas), size), a)
    columns = [(grid.index_of(t), column) for column, t in enumerate(obs_times)]
    snapshots = np.zeros((len(etas), size, len(columns)))
    violated = np.zeros((len(etas) - 1, size), dtype=bool)
    violations = np.zeros(len(etas) - 1)
    levels = np.asarray(etas)[:, None]
    scale = np.sqrt(grid.dt)
    for index in range(grid.steps + 1):
        if index:
            x = step_truncated_bessel_array(x, levels, grid.dt, scale * stream.normal(size)[None, :])
            above = x[:-1] > x[1:]
            violated |= above
            violations += above.sum(axis=1)
        for step, column in columns:
            if step == index:
                snapshots[:, :, column] = x
    return snapshots, violated, violations


def simulate_coupled_ensemble(etas: Sequence[float], a: float, grid: TimeGrid, replicas: int, seed: SeedSpec,
                              obs_times: Sequence[float]) -> CoupledEnsemble:
    """
    Common-noise ensemble across truncation levels with the pathwise ordering diagnostic.

    :param etas: distinct truncation levels
    :param a: common start
    :param grid: common grid
    :param replicas: paths per level
    :param seed: master seed
    :param obs_times: snapshot times
    :return: coupled ensemble, levels sorted increasingly
    """
    etas = sorted(float(eta) for eta in etas)
    if len(set(etas)) != len(etas):
        raise ConfigurationException("coupled family needs distinct etas")
    parts = ReplicaExecutor.get_instance().map_chunks(
        lambda size, chunk_seed: _coupled_block(etas, a, grid, size, random_stream(chunk_seed), obs_times),
        replicas, seed,
    )
    snapshots = np.concatenate([part[0] for part in parts], axis=1)
    violated = np.concatenate([part[1] for part in parts], axis=1)
    violations = np.sum([part[2] for part in parts], axis=0)
    path_rate = violated.mean(axis=1) if violated.size else np.zeros(0)
    point_rate = violations / (replicas * grid.steps) if len(etas) > 1 else np.zeros(0)
    logger.info(f"coupled family {etas}: pathwise ordering violated on {np.round(path_rate, 4).tolist()} of paths")
    return CoupledEnsemble(etas=etas, obs_times=list(obs_times), snapshots=snapshots,
                           path_violation_rate=path_rate.tolist(), point_violation_rate=list(point_rate))


def _squared_block(a: float, eta: float, grid: TimeGrid, size: int, stream: RandomStream) -> np.ndarray:
    z = np.full(size, a * a)
    scale = np.sqrt(grid.dt)
    for _ in range(grid.steps):
        z = squared_process_step_array(z, eta, grid.dt, scale * stream.normal(size))
    return z


def simulate_squared_ensemble(a: float, eta: float, grid: TimeGrid, replicas: int, seed: SeedSpec) -> np.ndarray:
    """
    Endpoints Z_T of the squared truncated process from a^2.

    :param a: start of X, Z starts at a^2
    :param eta: truncation level (0 allowed)
    :param grid: time grid
    :param replicas: paths
    :param seed: master seed
    :return: endpoint values
    """
    parts = ReplicaExecutor.get_instance().map_chunks(
        lambda size, chunk_seed: _squared_block(a, eta, grid, size, random_stream(chunk_seed)), replicas, seed,
    )
    return np.concatenate(parts)
