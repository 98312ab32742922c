"""
The even bump rho(u) = c exp(-1 / (1 - u^2)) on (-1, 1), its rescalings rho_eps(x) = rho(x / eps) / eps and the
double primitive R_eps(x) = int_0^x int_{-inf}^y rho_eps(z - eta) dz dy, tabulated once on [-1, 1].
"""
import functools
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate

from wetsim.constants import MOLLIFIER_RAW_MASS, MOLLIFIER_TABLE_POINTS


def raw_bump(u) -> np.ndarray:
    """exp(-1 / (1 - u^2)) inside (-1, 1), zero outside"""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    safe = np.where(inside, 1.0 - u ** 2, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def raw_mass() -> float:
    """int_{-1}^{1} exp(-1 / (1 - u^2)) du by adaptive quadrature (about 0.443994)"""
    return integrate.quad(lambda u: float(raw_bump(u)), -1.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]


@functools.lru_cache(maxsize=1)
def _tables() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid on [-1, 1] with the CDF of rho and the primitive of that CDF"""
    grid = np.linspace(-1.0, 1.0, MOLLIFIER_TABLE_POINTS)
    cdf = integrate.cumulative_trapezoid(raw_bump(grid), grid, initial=0.0)
    cdf /= cdf[-1]
    primitive = integrate.cumulative_trapezoid(cdf, grid, initial=0.0)
    for table in (grid, cdf, primitive):
        table.setflags(write=False)
    return grid, cdf, primitive


def bump_cdf(v) -> np.ndarray:
    """F(v) = int_{-1}^{v} rho"""
    grid, cdf, _ = _tables()
    return np.interp(v, grid, cdf, left=0.0, right=1.0)


def bump_cdf_primitive(v) -> np.ndarray:
    """G(v) = int_{-1}^{v} F; G = 0 below -1 and G(v) = G(1) + v - 1 above 1"""
    grid, _, primitive = _tables()
    v = np.asarray(v, dtype=float)
    return np.where(v >= 1.0, primitive[-1] + v - 1.0, np.interp(v, grid, primitive, left=0.0))


class MollifierSpec(BaseModel):
    """Mollifier of width eps"""
    eps: float = Field(..., gt=0)

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @property
    def c(self) -> float:
        """normalization making int rho = 1"""
        return 1.0 / MOLLIFIER_RAW_MASS

    def rho(self, x) -> np.ndarray:
        """rho_eps(x)"""
        return self.c * raw_bump(np.asarray(x, dtype=float) / self.eps) / self.eps

    def rho_prime(self, x) -> np.ndarray:
        """rho_eps'(x) = rho'(x / eps) / eps^2 with rho'(u) = -2u rho(u) / (1 - u^2)^2"""
        u = np.asarray(x, dtype=float) / self.eps
        inside = np.abs(u) < 1.0
        safe = np.where(inside, 1.0 - u ** 2, 1.0)
        return np.where(inside, -2.0 * u * self.c * raw_bump(u) / safe ** 2, 0.0) / self.eps ** 2

    def primitive_prime(self, x, eta: float) -> np.ndarray:
        """R_eps'(x) = int_{-inf}^x rho_eps(z - eta) dz, in [0, 1]"""
        return bump_cdf((np.asarray(x, dtype=float) - eta) / self.eps)

    def primitive(self, x, eta: float) -> np.ndarray:
        """R_eps(x) with R_eps(0) = 0 and 0 <= R_eps(x) <= x for x >= 0"""
        x = np.asarray(x, dtype=float)
        return self.eps * (bump_cdf_primitive((x - eta) / self.eps) - bump_cdf_primitive(-eta / self.eps))
