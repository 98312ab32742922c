"""
Exact grid samplers of the reference laws: reflecting Brownian motion, the 3-dimensional Bessel process
(norm of a 3-d Brownian motion) and the Brownian meander, either Imhof-weighted Bessel-3 or direct.
"""
import numpy as np

from wetsim.core.models import SeedSpec
from wetsim.core.random import RandomStream, random_stream
from wetsim.exceptions import UnsupportedLawException
from wetsim.log import Loggers
from wetsim.static_models.models import ReferenceEnsemble, ReferenceKind, ReferencePath, ReferencePathLaw
from wetsim.utils.parallel import ReplicaExecutor

logger = Loggers.get_named_logger("WETSIM_REFERENCE")


def brownian_paths(stream: RandomStream, replicas: int, steps: int, dt: float, dims: int = 1) -> np.ndarray:
    """Brownian motions from 0 on the grid, shape (replicas, steps + 1, dims)"""
    increments = np.sqrt(dt) * stream.normal((replicas, steps, dims))
    paths = np.zeros((replicas, steps + 1, dims))
    np.cumsum(increments, axis=1, out=paths[:, 1:])
    return paths


def imhof_log_weight(endpoints: np.ndarray, horizon: float = 1.0) -> np.ndarray:
    """log of the meander density against Bessel-3 from 0, sqrt(pi T / 2) / X_T"""
    return 0.5 * np.log(0.5 * np.pi * horizon) - np.log(endpoints)


def _sample_block(law: ReferencePathLaw, replicas: int, stream: RandomStream):
    grid = law.grid
    times = grid.points - grid.t0
    log_weights = np.zeros(replicas)
    if law.kind == ReferenceKind.REFLECTING_BM:
        paths = np.abs(law.start + brownian_paths(stream, replicas, grid.steps, grid.dt)[..., 0])
    elif law.kind in (ReferenceKind.BESSEL3, ReferenceKind.MEANDER):
        motion = brownian_paths(stream, replicas, grid.steps, grid.dt, dims=3)
        motion[..., 0] += law.start
        paths = np.linalg.norm(motion, axis=-1)
        if law.kind == ReferenceKind.MEANDER:
            log_weights = imhof_log_weight(paths[:, -1], times[-1])
    else:
        motion = brownian_paths(stream, replicas, grid.steps, grid.dt, dims=3)
        horizon = times[-1]
        bridges = motion - (times / horizon)[None, :, None] * motion[:, -1:, :]
        endpoint = np.sqrt(horizon) * stream.rayleigh(replicas)
        bridges[..., 2] += (times / horizon)[None, :] * endpoint[:, None]
        paths = np.linalg.norm(bridges, axis=-1)
    return paths, log_weights


def sample_reference_ensemble(law: ReferencePathLaw, replicas: int, seed: SeedSpec) -> ReferenceEnsemble:
    """
    Samples ``replicas`` paths of a reference law on its grid.

    :param law: reference law; meander kinds need start 0
    :param replicas: number of paths
    :param seed: master seed
    :return: ensemble with Imhof log-weights for kind 'meander', zeros otherwise
    """
    if law.kind in (ReferenceKind.MEANDER, ReferenceKind.MEANDER_DIRECT) and law.start > 0:
        raise UnsupportedLawException("the meander is only available from 0 (Imhof relation)")
    parts = ReplicaExecutor.get_instance().map_chunks(
        lambda size, chunk_seed: _sample_block(law, size, random_stream(chunk_seed)), replicas, seed,
    )
    logger.debug(f"sampled {replicas} {law.kind.value} paths on {law.grid.steps} steps")
    return ReferenceEnsemble(
        law=law,
        paths=np.concatenate([paths for paths, _ in parts]),
        log_weights=np.concatenate([weights for _, weights in parts]),
    )


def sample_reference_path(law: ReferencePathLaw, seed: SeedSpec) -> ReferencePath:
    """
    One reference path.

    :param law: reference law
    :param seed: stream seed
    :return: path values on the grid with its log-weight
    """
    if law.kind in (ReferenceKind.MEANDER, ReferenceKind.MEANDER_DIRECT) and law.start > 0:
        raise UnsupportedLawException("the meander is only available from 0 (Imhof relation)")
    paths, log_weights = _sample_block(law, 1, random_stream(seed))
    return ReferencePath(values=paths[0], log_weight=float(log_weights[0]))
