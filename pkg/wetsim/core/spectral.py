"""
Sine-basis coefficients and negative Sobolev norms.
Coefficients are exact integrals of the affine (or constant) pieces against e_n(x) = sqrt(2) sin(n pi x),
assembled once per (resolution, cutoff, kind) into a weight matrix, so a coefficient vector is W @ values.
"""
import functools

import numpy as np

from wetsim.constants import DEFAULT_SPECTRAL_CUTOFF
from wetsim.core.models import InterpolatedPath, PathKind, SpectralVector


@functools.lru_cache(maxsize=64)
def sine_weight_matrix(resolution: int, cutoff: int, kind: PathKind = PathKind.AFFINE) -> np.ndarray:
    """
    Matrix W of shape (cutoff, resolution + 1) with <f, e_n> = (W @ values)[n - 1] exactly for grid paths.

    :param resolution: grid cells M
    :param cutoff: number of modes K
    :param kind: affine or caglad pieces
    :return: read-only weight matrix
    """
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    k = np.pi * np.arange(1, cutoff + 1)[:, None]
    left = np.arange(resolution)[None, :] / resolution
    right = np.arange(1, resolution + 1)[None, :] / resolution
    # I0 = int sin(k x) dx, I1 = int x sin(k x) dx over each cell
    i0 = (np.cos(k * left) - np.cos(k * right)) / k
    i1 = (-right * np.cos(k * right) + np.sin(k * right) / k + left * np.cos(k * left) - np.sin(k * left) / k) / k
    weights = np.zeros((cutoff, resolution + 1))
    if kind == PathKind.AFFINE:
        h = 1.0 / resolution
        weights[:, :-1] += (right * i0 - i1) / h
        weights[:, 1:] += (i1 - left * i0) / h
    else:
        weights[:, 1:] = i0
    weights *= np.sqrt(2.0)
    weights.setflags(write=False)
    return weights


def sine_coefficients_array(values: np.ndarray, resolution: int, cutoff: int,
                            kind: PathKind = PathKind.AFFINE) -> np.ndarray:
    """
    Ensemble kernel: coefficients of many grid paths at once.

    :param values: grid values of shape (..., resolution + 1)
    :param resolution: grid cells
    :param cutoff: number of modes
    :param kind: path kind
    :return: array of shape (..., cutoff)
    """
    return np.asarray(values, dtype=float) @ sine_weight_matrix(resolution, cutoff, kind).T


def sine_coefficients(path: InterpolatedPath, cutoff: int = DEFAULT_SPECTRAL_CUTOFF) -> SpectralVector:
    """
    Coefficients <path, e_n> for n = 1..cutoff.

    :param path: interpolated path
    :param cutoff: number of modes, at least 1
    :return: spectral vector
    """
    return SpectralVector(coeffs=sine_coefficients_array(path.values, path.resolution, cutoff, path.kind))


def sobolev_weights(cutoff: int, gamma: float) -> np.ndarray:
    return np.arange(1, cutoff + 1, dtype=float) ** (-2.0 * gamma)


def negative_sobolev_norm(v: SpectralVector, gamma: float) -> float:
    """
    ||f||_{-gamma} = sqrt(sum_n n^{-2 gamma} <f, e_n>^2) over the stored modes.

    :param v: spectral vector
    :param gamma: nonnegative exponent
    :return: norm
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return float(np.sqrt(np.sum(sobolev_weights(v.cutoff, gamma) * v.coeffs ** 2)))


def negative_sobolev_norm_array(coeffs: np.ndarray, gamma: float) -> np.ndarray:
    """Row-wise ||.||_{-gamma} of coefficient arrays of shape (..., K)"""
    coeffs = np.asarray(coeffs, dtype=float)
    return np.sqrt(np.sum(sobolev_weights(coeffs.shape[-1], gamma) * coeffs ** 2, axis=-1))


def l2_norm_squared(path: InterpolatedPath) -> float:
    """
    Exact integral of path^2 over [0, 1] (the Parseval limit of the sine coefficients).

    :param path: interpolated path
    :return: squared L^2 norm
    """
    v = path.values
    h = 1.0 / path.resolution
    if path.kind == PathKind.AFFINE:
        return float(np.sum(h * (v[:-1] ** 2 + v[:-1] * v[1:] + v[1:] ** 2) / 3.0))
    return float(np.sum(h * v[1:] ** 2))
