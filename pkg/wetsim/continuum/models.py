"""Module contains models of the continuum wetting simulations"""
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, validator, root_validator

from wetsim.core.models import FrozenModel, TimeGrid, _readonly_array


class ContinuumConfig(BaseModel):
    """Truncated-drift Bessel SDE on a time grid: start a, truncation level eta, optional mollifier width eps"""
    a: float = Field(0.0, ge=0)
    eta: float = Field(..., gt=0)
    eps: Optional[float] = Field(None, gt=0)
    grid: TimeGrid

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def check_eps(cls, fields):
        if fields["eps"] is not None and not fields["eps"] < fields["eta"]:
            raise ValueError("eps must be smaller than eta")
        return fields

    @property
    def resolves_strip(self) -> bool:
        """grid.dt <= eta^2 / 10"""
        return self.grid.dt <= self.eta ** 2 / 10.0


class ContinuumPath(FrozenModel):
    """One discretized path with its driving increments"""
    grid: TimeGrid
    x: np.ndarray
    b_increments: np.ndarray
    local_time_eta: float = Field(0.0, ge=0)
    crossings: int = 0
    """crossings of the level eta"""

    @validator("x", "b_increments", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @root_validator(skip_on_failure=True)
    def check_path(cls, fields):
        if fields["x"].shape != (fields["grid"].steps + 1,):
            raise ValueError("path needs one value per grid point")
        if fields["b_increments"].shape != (fields["grid"].steps,):
            raise ValueError("path needs one increment per step")
        if np.any(fields["x"] < 0):
            raise ValueError("paths are nonnegative")
        return fields


class GirsanovWeight(BaseModel):
    """log E(M)_T = log boundary factor + L^eta_T / (2 eta)"""
    log_weight: float
    log_boundary: float
    """log((X_T ^ eta) / X_T) + log(a / (a ^ eta))"""
    occupation_term: float
    """L^eta_T / (2 eta)"""

    @property
    def components(self) -> Tuple[float, float]:
        return self.log_boundary, self.occupation_term


class ContinuumEnsemble(FrozenModel):
    """
    Streamed functionals of a path ensemble: full paths are not kept.
    Arrays have a leading replica axis; snapshots are taken at ``obs_times``.
    """
    a: float
    eta: Optional[float] = None
    """truncation level of the simulated SDE, None for exact Bessel-3 paths"""
    level: Optional[float] = None
    """level whose local time and occupation integrals were accumulated"""
    grid: TimeGrid
    obs_times: List[float] = []
    snapshots: np.ndarray
    endpoints: np.ndarray
    local_time: np.ndarray
    """Richardson-extrapolated local time at ``level``"""
    occupation: Optional[np.ndarray] = None
    """int rho_eps(X_s - level) ds for the mollifier width"""
    occupation_ito: Optional[np.ndarray] = None
    """2 (R(X_T) - R(X_0) - sum R'(X_k) dX_k), the Ito-Tanaka form of the same integral"""
    bracket: Optional[np.ndarray] = None
    """(4 / level^2) int R'(X_s)^2 ds"""
    euler_log_weight: Optional[np.ndarray] = None
    """summed log density of the truncated Euler chain against exact Bessel-3 steps, Bessel-3 ensembles only"""
    minimum: np.ndarray
    crossings: np.ndarray

    @validator("snapshots", "endpoints", "local_time", "minimum", "crossings", "occupation", "occupation_ito",
               "bracket", "euler_log_weight", pre=True)
    def to_array(cls, value):
        return None if value is None else _readonly_array(value)

    @property
    def replicas(self) -> int:
        return self.endpoints.size

    def snapshot(self, t: float) -> np.ndarray:
        index = int(np.argmin(np.abs(np.asarray(self.obs_times) - t)))
        if not np.isclose(self.obs_times[index], t):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[:, index]


class CoupledEnsemble(FrozenModel):
    """Snapshots of a common-noise family across truncation levels, shape (levels, replicas, times)"""
    etas: List[float]
    obs_times: List[float]
    snapshots: np.ndarray
    path_violation_rate: List[float]
    """per consecutive level pair: fraction of replicas with X^eta > X^eta' somewhere on the grid"""
    point_violation_rate: List[float]
    """per consecutive level pair: fraction of (replica, grid point) pairs with X^eta > X^eta'"""

    @validator("snapshots", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    def marginal(self, eta: float, t: float) -> np.ndarray:
        level = int(np.argmin(np.abs(np.asarray(self.etas) - eta)))
        time = int(np.argmin(np.abs(np.asarray(self.obs_times) - t)))
        return self.snapshots[level, :, time]
