"""Module contains models of the static wetting laws and reference path laws"""
import enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, validator, root_validator

from wetsim.core.models import FrozenModel, TimeGrid, _readonly_array
from wetsim.exceptions import UnsupportedPotentialException
from wetsim.stats.models import Estimate


class PotentialShape(str, enum.Enum):
    """Profile of the strip reward"""
    INDICATOR = "indicator"
    SMOOTH_BUMP = "smooth-bump"


class StripPotential(BaseModel):
    """
    Strip reward phi_a supported in [0, a].
    Smooth bump: phi_a(x) = beta * (1 - (x / a)^2)^2 on [0, a]; indicator: beta * 1_[0, a].
    """
    a: float = Field(..., gt=0)
    """strip width"""
    beta: float
    """height beta_a"""
    shape: PotentialShape = PotentialShape.SMOOTH_BUMP

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @classmethod
    def normalized(cls, a: float, weight: float = 1.0, shape: PotentialShape = PotentialShape.SMOOTH_BUMP):
        """
        Potential with a * exp(beta) = weight

        :param a: strip width
        :param weight: the constant a * exp(beta)
        :param shape: profile
        :return: strip potential
        """
        return cls(a=a, beta=float(np.log(weight / a)), shape=shape)

    @property
    def max_value(self) -> float:
        """upper bound of phi_a over [0, inf)"""
        return max(self.beta, 0.0)

    def require_smooth(self, operation: str) -> "StripPotential":
        if self.shape != PotentialShape.SMOOTH_BUMP:
            raise UnsupportedPotentialException(operation)
        return self

    def value(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= self.a)
        if self.shape == PotentialShape.INDICATOR:
            return np.where(inside, self.beta, 0.0)
        u = x / self.a
        return np.where(inside, self.beta * (1.0 - u ** 2) ** 2, 0.0)

    def derivative(self, x):
        """
        phi_a'(x) in closed form; zero outside [0, a].

        :param x: heights
        :return: derivative
        """
        self.require_smooth("phi_a derivative")
        x = np.asarray(x, dtype=float)
        u = x / self.a
        inside = (x >= 0) & (x <= self.a)
        return np.where(inside, -4.0 * self.beta * u * (1.0 - u ** 2) / self.a, 0.0)


class PinningParams(BaseModel):
    """delta-pinning model parameters"""
    beta: float
    """pinning strength"""
    n: int = Field(..., ge=1)
    """sites"""

    @validator("beta")
    def check_finite(cls, beta):
        if not np.isfinite(beta):
            raise ValueError("beta must be finite")
        return beta


class ReferenceKind(str, enum.Enum):
    """Reference laws on C([0, T])"""
    REFLECTING_BM = "reflecting-bm"
    BESSEL3 = "bessel3"
    MEANDER = "meander"
    """Bessel-3 paths carrying the Imhof log-weight"""
    MEANDER_DIRECT = "meander-direct"
    """Bessel-3 bridge to a Rayleigh endpoint"""


class ReferencePathLaw(BaseModel):
    """Law of a nonnegative reference path started at ``start``"""
    kind: ReferenceKind
    start: float = Field(0.0, ge=0)
    grid: TimeGrid

    @root_validator(skip_on_failure=True)
    def check_grid(cls, fields):
        if fields["grid"].t0 != 0.0:
            raise ValueError("reference paths start at time 0")
        return fields


class ReferencePath(FrozenModel):
    """One sampled reference path"""
    values: np.ndarray
    log_weight: float = 0.0
    """importance log-weight, 0 for unweighted laws"""

    @validator("values", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)


class ReferenceEnsemble(FrozenModel):
    """Replica ensemble of reference paths, shape (replicas, steps + 1)"""
    law: ReferencePathLaw
    paths: np.ndarray
    log_weights: np.ndarray

    @validator("paths", "log_weights", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @property
    def endpoints(self) -> np.ndarray:
        return self.paths[:, -1]

    @property
    def replicas(self) -> int:
        return self.paths.shape[0]

    def path(self, index: int) -> ReferencePath:
        return ReferencePath(values=self.paths[index], log_weight=float(self.log_weights[index]))


class ConditionalSliceEstimate(BaseModel):
    """Kernel-smoothed estimate of sigma_i(f | b): marginal density of site i at b times E[f | phi_i = b]"""
    site: int
    """1-based site index"""
    level: float
    """level b"""
    value: Estimate
    ess: float
    """effective number of samples inside the kernel"""
    reliable: bool

    @validator("value")
    def check_count(cls, value):
        if value.n <= 0:
            raise ValueError("slice estimate needs samples")
        return value


class ChainSamples(FrozenModel):
    """Kept states of independent Gibbs chains, shape (chains, kept, N)"""
    samples: np.ndarray
    burn_in: int
    thin: int
    autocorrelation_time: Optional[float] = None
    """integrated autocorrelation time of the first-site trace of chain 0"""

    @validator("samples", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @property
    def flat(self) -> np.ndarray:
        return self.samples.reshape(-1, self.samples.shape[-1])


class IbpfReport(BaseModel):
    """Both sides of the discrete integration-by-parts formula"""
    n: int
    potential: StripPotential
    f_id: str
    h: list
    lhs: float
    rhs: float
    residual: float
    """|lhs - rhs| / (1 + |lhs|) for quadrature, signed lhs - rhs for Monte Carlo"""
    se: float = 0.0
    slices: list = []
    """ConditionalSliceEstimate dumps of the Monte Carlo variant"""
