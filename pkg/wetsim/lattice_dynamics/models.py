"""Module contains models of the reflected lattice dynamics"""
from typing import List

import numpy as np
from pydantic import validator, root_validator

from wetsim.constants import DEFAULT_SPECTRAL_CUTOFF
from wetsim.core.interpolation import affine_grid_values
from wetsim.core.models import FrozenModel, InterpolatedPath, LatticeField, PathKind, _readonly_array
from wetsim.core.spectral import sine_coefficients_array


class DynamicsState(FrozenModel):
    """State of the reflected gradient system: heights, accumulated reflection local times and model time"""
    x: LatticeField
    ell: np.ndarray
    """reflection local time per site"""
    t: float = 0.0
    contact: float = 0.0
    """running sum of x_i * d ell_i over steps, zero under projection"""

    @validator("ell", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @root_validator(skip_on_failure=True)
    def check_state(cls, fields):
        if fields["ell"].shape != (fields["x"].n,):
            raise ValueError("ell needs one entry per site")
        if np.any(fields["ell"] < 0):
            raise ValueError("reflection local times are nonnegative")
        return fields

    @classmethod
    def start(cls, x: LatticeField) -> "DynamicsState":
        """State at time 0 with zero local times"""
        return cls(x=x.check_nonnegative(), ell=np.zeros(x.n))


class RescaledTrajectory(FrozenModel):
    """Snapshots Y_t = Phi_N(X(N^2 t)) of one trajectory at the observation times"""
    n: int
    times: List[float]
    snapshots: List[InterpolatedPath]

    @root_validator(skip_on_failure=True)
    def check_snapshots(cls, fields):
        if len(fields["times"]) != len(fields["snapshots"]):
            raise ValueError("one snapshot per observation time")
        return fields

    def coefficients(self, cutoff: int = DEFAULT_SPECTRAL_CUTOFF) -> np.ndarray:
        """Sine coefficients of every snapshot, shape (times, cutoff)"""
        return np.stack([
            sine_coefficients_array(path.values, path.resolution, cutoff, path.kind) for path in self.snapshots
        ])


class RescaledEnsemble(FrozenModel):
    """
    Replica ensemble of rescaled trajectories kept as lattice heights, shape (replicas, times, N).
    Paths are rebuilt with the affine map on demand.
    """
    n: int
    times: np.ndarray
    heights: np.ndarray
    cutoff: int = DEFAULT_SPECTRAL_CUTOFF

    @validator("times", "heights", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @property
    def replicas(self) -> int:
        return self.heights.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        """Sine coefficients of every snapshot, shape (replicas, times, cutoff)"""
        return sine_coefficients_array(affine_grid_values(self.heights, self.n), self.n, self.cutoff)

    def trajectory(self, replica: int) -> RescaledTrajectory:
        return RescaledTrajectory(
            n=self.n,
            times=[float(t) for t in self.times],
            snapshots=[
                InterpolatedPath(resolution=self.n, values=values, kind=PathKind.AFFINE)
                for values in affine_grid_values(self.heights[replica], self.n)
            ],
        )
