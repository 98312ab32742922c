"""Rescaling maps from lattice fields to paths on [0, 1]"""
import numpy as np

from wetsim.core.models import InterpolatedPath, LatticeField, PathKind
from wetsim.exceptions import GridMismatchException


def _check_resolution(n: int, resolution: int) -> None:
    if resolution < 1 or resolution % n != 0:
        raise GridMismatchException(resolution=resolution, n=n)


def padded_heights(values: np.ndarray) -> np.ndarray:
    """
    Prepends the pinned height phi_0 = 0 along the last axis.

    :param values: heights of shape (..., N)
    :return: heights of shape (..., N + 1)
    """
    values = np.asarray(values, dtype=float)
    zeros = np.zeros(values.shape[:-1] + (1,))
    return np.concatenate([zeros, values], axis=-1)


def affine_grid_values(values: np.ndarray, resolution: int) -> np.ndarray:
    """
    Ensemble kernel of the affine rescaling map Phi_N: rows of heights to rows of grid values.

    :param values: heights of shape (..., N)
    :param resolution: grid cells M, a multiple of N
    :return: array of shape (..., M + 1) with Phi_N(phi)(j / M)
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    _check_resolution(n, resolution)
    nodes = padded_heights(values) / np.sqrt(n)
    refine = resolution // n
    if refine == 1:
        return nodes
    weights = np.arange(refine) / refine
    left = nodes[..., :-1, None]
    right = nodes[..., 1:, None]
    inner = (left + weights * (right - left)).reshape(values.shape[:-1] + (resolution,))
    return np.concatenate([inner, nodes[..., -1:]], axis=-1)


def interpolate_lattice(field: LatticeField, resolution: int) -> InterpolatedPath:
    """
    Affine interpolation Phi_N(phi)(y) = phi_[Ny]/sqrt(N) + (Ny - [Ny])(phi_[Ny]+1 - phi_[Ny])/sqrt(N), phi_0 = 0,
    sampled on y = j / resolution.

    :param field: lattice field
    :param resolution: grid cells, positive multiple of field.n
    :return: affine path
    """
    return InterpolatedPath(
        resolution=resolution,
        values=affine_grid_values(field.values, resolution),
        kind=PathKind.AFFINE,
    )


def embed_caglad(field: LatticeField, resolution: int) -> InterpolatedPath:
    """
    Piecewise constant, left-continuous embedding phi_ceil(Ny) / sqrt(N).

    :param field: lattice field
    :param resolution: grid cells, positive multiple of field.n
    :return: caglad path
    """
    _check_resolution(field.n, resolution)
    j = np.arange(resolution + 1)
    site = (j * field.n + resolution - 1) // resolution
    return InterpolatedPath(
        resolution=resolution,
        values=padded_heights(field.values)[site] / np.sqrt(field.n),
        kind=PathKind.CAGLAD,
    )
