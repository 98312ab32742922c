"""Module contains models of the reflected SPDE with attraction"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, validator, root_validator

from wetsim.continuum.mollifier import MollifierSpec
from wetsim.core.models import FrozenModel, _readonly_array
from wetsim.exceptions import StabilityException


class SpdeConfig(BaseModel):
    """
    Finite-difference discretization on sites x_j = j / n_space, j = 1..n_space.
    u(0) = a is clamped, x = 1 is a free (discrete Neumann) end.
    """
    n_space: int = Field(..., ge=2)
    dt: float = Field(..., gt=0)
    eta: float = Field(..., gt=0)
    eps: float = Field(..., gt=0)
    a: float = Field(0.0, ge=0)
    attraction: bool = True
    """False switches the mollified attraction off (the comparison run of the localization diagnostic)"""
    endpoint_tilt: bool = True
    """drift of the (u(1) ^ eta) factor of the mollified law at the free end"""

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def check_eps(cls, fields):
        if not fields["eps"] < fields["eta"]:
            raise ValueError("eps must be smaller than eta")
        return fields

    @property
    def dx(self) -> float:
        return 1.0 / self.n_space

    @property
    def stability_limit(self) -> float:
        """dx^2 / 4"""
        return self.dx ** 2 / 4.0

    @property
    def mollifier(self) -> MollifierSpec:
        return MollifierSpec(eps=self.eps)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(1, self.n_space + 1) * self.dx

    def check_stability(self) -> "SpdeConfig":
        """
        Raises StabilityException outside dt <= dx^2 / 4

        :return: the config itself
        """
        if self.dt > self.stability_limit:
            raise StabilityException(self.dt, self.stability_limit)
        return self


class SpdeState(FrozenModel):
    """Field u on the sites, accumulated reflection measure per site, model time and the complementarity sum"""
    u: np.ndarray
    zeta_mass: np.ndarray
    t: float = 0.0
    complementarity: float = 0.0
    """sum over steps and sites of u_i * d zeta_i"""
    clamp_events: int = 0

    @validator("u", "zeta_mass", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @root_validator(skip_on_failure=True)
    def check_state(cls, fields):
        if fields["u"].shape != fields["zeta_mass"].shape or fields["u"].ndim != 1:
            raise ValueError("u and zeta_mass must be vectors of the same size")
        if np.any(fields["u"] < 0) or np.any(fields["zeta_mass"] < 0):
            raise ValueError("u and zeta_mass are nonnegative")
        return fields

    @classmethod
    def start(cls, u) -> "SpdeState":
        """
        State at t = 0 with no reflection yet

        :param u: initial field on the sites
        :return: state
        """
        u = np.asarray(u, dtype=float)
        return cls(u=u, zeta_mass=np.zeros_like(u))


class SpdeEnsemble(FrozenModel):
    """Independent replicas of a long SPDE run"""
    cfg: SpdeConfig
    sample_times: List[float]
    endpoint_samples: np.ndarray
    """u(1) per replica at the sample times, shape (replicas, samples)"""
    strip_fraction: np.ndarray
    """per replica: time fraction with u(1) inside (eta - eps, eta + eps)"""
    final: np.ndarray
    """fields at the end of the run, shape (replicas, n_space)"""
    zeta_total: np.ndarray
    complementarity: float
    minimum: float
    """smallest value of u over all sites, steps and replicas"""
    acceptance_rate: Optional[float] = None
    """Metropolis acceptance rate, None for the projected Euler scheme"""

    @validator("endpoint_samples", "strip_fraction", "final", "zeta_total", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @property
    def replicas(self) -> int:
        return self.final.shape[0]

    @property
    def pooled_samples(self) -> np.ndarray:
        return self.endpoint_samples.ravel()
