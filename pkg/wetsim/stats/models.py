"""Module contains result models of statistical verdicts"""
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, validator

from wetsim.constants import BATCH_MEANS_BATCHES, K_SE


class Estimate(BaseModel):
    """Monte Carlo scalar"""
    mean: float
    se: float
    """standard error"""
    n: int
    """sample count"""

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @validator("se")
    def check_se(cls, se):
        if se < 0 or np.isnan(se):
            raise ValueError("standard error must be nonnegative")
        return se

    @classmethod
    def from_samples(cls, samples) -> "Estimate":
        """
        Mean and standard error of i.i.d. samples

        :param samples: 1-d samples
        :return: estimate
        """
        samples = np.asarray(samples, dtype=float).ravel()
        n = samples.size
        se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(mean=float(np.mean(samples)), se=se, n=n)

    @classmethod
    def from_batch_means(cls, series, batches: int = BATCH_MEANS_BATCHES) -> "Estimate":
        """
        Mean of a correlated series with the batch-means standard error.

        :param series: chain output in time order
        :param batches: number of contiguous batches
        :return: estimate
        """
        series = np.asarray(series, dtype=float).ravel()
        size = series.size // batches
        if size < 2:
            return cls.from_samples(series)
        means = series[: size * batches].reshape(batches, size).mean(axis=1)
        return cls(mean=float(np.mean(series)), se=float(np.std(means, ddof=1) / np.sqrt(batches)), n=series.size)

    def minus(self, other: "Estimate") -> "Estimate":
        """Difference of two independent estimates"""
        return Estimate(mean=self.mean - other.mean, se=float(np.hypot(self.se, other.se)), n=min(self.n, other.n))

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(mean=self.mean * factor, se=self.se * abs(factor), n=self.n)

    def within(self, target: float, k_se: float = K_SE) -> bool:
        """True when |mean - target| <= k_se * se"""
        return abs(self.mean - target) <= k_se * self.se


class KsResult(BaseModel):
    """Kolmogorov-Smirnov distance with its decision"""
    statistic: float = Field(..., ge=0.0, le=1.0)
    n: int
    threshold: float
    passed: bool = Field(..., alias="pass")

    class Config:
        """pydantic model configuration"""
        allow_population_by_field_name = True
        allow_mutation = False


class OrderCheckResult(BaseModel):
    """Outcome of the CDF stochastic-ordering check F_high <= F_low + tolerance"""
    passed: bool = Field(..., alias="pass")
    max_violation: float
    tolerance: float
    grid_size: int

    class Config:
        """pydantic model configuration"""
        allow_population_by_field_name = True


class WeightedMeanResult(BaseModel):
    """Outcome of a (self-normalized or plain) weighted mean test"""
    passed: bool = Field(..., alias="pass")
    estimate: Estimate
    target: float
    k_se: float
    ess: float
    """effective sample size (sum w)^2 / sum w^2"""
    normalized: bool

    class Config:
        """pydantic model configuration"""
        allow_population_by_field_name = True


class IncrementRow(BaseModel):
    """One row of the increment-moment (tightness) report"""
    n: int
    s: float
    t: float
    h_id: str
    ratio: float
    """E[<Y_t - Y_s, h>^2] / (||h||^2 (t - s)); h_id 'H-1' rows hold E||Y_t - Y_s||_{-1}^2 / (t - s)"""
    se: float
    replicas: int
    reliable: bool


class VerdictRecord(BaseModel):
    """Machine-readable verdict of one acceptance check"""
    test_id: str
    inputs_digest: str
    statistic: float
    threshold: float
    passed: bool = Field(..., alias="pass")
    seed: int
    detail: Optional[str] = None

    class Config:
        """pydantic model configuration"""
        allow_population_by_field_name = True
