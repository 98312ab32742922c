"""
Statistical verdicts: KS distances, CDF ordering, weighted means, increment-moment tables and chain diagnostics.
Every decision uses the fixed K_SE standard-error rule or a fixed KS threshold.
"""
from typing import Any, Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from wetsim.constants import (
    BATCH_MEANS_BATCHES,
    K_SE,
    KS_ASYMPTOTIC_QUANTILE,
    KS_NOISE_FACTOR,
    MIN_EFFECTIVE_SAMPLE_SIZE,
    MIN_TRAJECTORIES_FOR_SE,
    QUANTILE_GRID_SIZE,
)
from wetsim.core.models import SpectralVector
from wetsim.exceptions import InsufficientSamplesException, UnreliableEstimateWarning
from wetsim.log import Loggers
from wetsim.stats.models import Estimate, IncrementRow, KsResult, OrderCheckResult, WeightedMeanResult
from wetsim.utils.utility import emit_warning

logger = Loggers.get_named_logger("WETSIM_STATS")

H_MINUS_ONE_ID = "H-1"


def pure_noise_ks_threshold(n: int) -> float:
    """KS threshold for comparisons without scheme bias: 1.36 / sqrt(n) times the safety factor"""
    return KS_ASYMPTOTIC_QUANTILE / np.sqrt(n) * KS_NOISE_FACTOR


def ks_statistic(samples, cdf: Callable, threshold: float = None) -> KsResult:
    """
    Sup-distance between the empirical CDF of samples and an analytic CDF.

    :param samples: nonempty 1-d samples
    :param cdf: vectorized CDF
    :param threshold: pass threshold, defaults to the pure-noise threshold for the sample count
    :return: KS result, pass iff statistic <= threshold
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InsufficientSamplesException("ks_statistic needs at least one sample")
    statistic = float(stats.kstest(samples, cdf).statistic)
    threshold = pure_noise_ks_threshold(samples.size) if threshold is None else threshold
    return KsResult(statistic=statistic, n=samples.size, threshold=threshold, passed=statistic <= threshold)


def ks_two_sample(first, second, threshold: float = None) -> KsResult:
    """
    Two-sample KS distance.

    :param first: samples of the first law
    :param second: samples of the second law
    :param threshold: pass threshold, defaults to the pure-noise threshold for the effective size
    :return: KS result
    """
    first = np.asarray(first, dtype=float).ravel()
    second = np.asarray(second, dtype=float).ravel()
    if first.size == 0 or second.size == 0:
        raise InsufficientSamplesException("ks_two_sample needs two nonempty samples")
    statistic = float(stats.ks_2samp(first, second).statistic)
    n_eff = first.size * second.size // (first.size + second.size)
    threshold = pure_noise_ks_threshold(max(n_eff, 1)) if threshold is None else threshold
    return KsResult(statistic=statistic, n=min(first.size, second.size), threshold=threshold,
                    passed=statistic <= threshold)


def weighted_ks_distance(samples, reference, log_weights, threshold: float) -> KsResult:
    """
    Sup-distance between the empirical CDF of samples and the self-normalized weighted CDF of a reference sample.

    :param samples: plain samples
    :param reference: importance-sampled reference values
    :param log_weights: log weights of the reference values
    :param threshold: pass threshold
    :return: KS result; n is the smaller of the sample count and the reference ESS
    """
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    reference = np.asarray(reference, dtype=float).ravel()
    log_weights = np.asarray(log_weights, dtype=float).ravel()
    if samples.size == 0 or reference.size == 0 or reference.shape != log_weights.shape:
        raise InsufficientSamplesException("weighted_ks_distance needs nonempty samples and matching weights")
    order = np.argsort(reference, kind="stable")
    reference = reference[order]
    weights = np.exp(log_weights[order] - np.max(log_weights))
    cumulative = np.cumsum(weights) / np.sum(weights)
    points = np.concatenate([samples, reference])
    sample_cdf = np.searchsorted(samples, points, side="right") / samples.size
    index = np.searchsorted(reference, points, side="right")
    reference_cdf = np.where(index > 0, cumulative[np.maximum(index - 1, 0)], 0.0)
    statistic = float(np.max(np.abs(sample_cdf - reference_cdf)))
    n = int(min(samples.size, effective_sample_size(log_weights)))
    return KsResult(statistic=statistic, n=n, threshold=threshold, passed=statistic <= threshold)


def empirical_cdf(samples: np.ndarray, points: np.ndarray) -> np.ndarray:
    ordered = np.sort(np.asarray(samples, dtype=float).ravel())
    return np.searchsorted(ordered, points, side="right") / ordered.size


def cdf_order_check(samples_low_eta, samples_high_eta, tolerance: float,
                    grid_size: int = QUANTILE_GRID_SIZE) -> OrderCheckResult:
    """
    Checks stochastic domination F_high(x) <= F_low(x) + tolerance on the merged quantile grid.

    :param samples_low_eta: samples of the dominated law
    :param samples_high_eta: samples of the dominating law
    :param tolerance: allowed CDF excess
    :param grid_size: number of quantile levels of the merged sample
    :return: order check result with the largest excess found
    """
    low = np.asarray(samples_low_eta, dtype=float).ravel()
    high = np.asarray(samples_high_eta, dtype=float).ravel()
    if low.size == 0 or high.size == 0:
        raise InsufficientSamplesException("cdf_order_check needs two nonempty samples")
    grid = np.quantile(np.concatenate([low, high]), np.linspace(0.0, 1.0, grid_size))
    violation = float(np.max(np.maximum(empirical_cdf(high, grid) - empirical_cdf(low, grid), 0.0)))
    return OrderCheckResult(passed=violation <= tolerance, max_violation=violation, tolerance=tolerance,
                            grid_size=grid_size)


def effective_sample_size(log_weights) -> float:
    """(sum w)^2 / sum w^2, computed from log weights"""
    log_weights = np.asarray(log_weights, dtype=float).ravel()
    weights = np.exp(log_weights - np.max(log_weights))
    return float(np.sum(weights) ** 2 / np.sum(weights ** 2))


def weighted_estimate(values, log_weights, normalized: bool = True) -> Tuple[Estimate, float]:
    """
    Importance-weighted mean with its standard error.

    Self-normalized estimates use the delta-method SE sqrt(sum w^2 (v - mu)^2) / sum w; plain ones average
    exp(log_w) * v with the i.i.d. SE. Pairs are put in a canonical order first so the result does not depend
    on the input order.

    :param values: values v_k
    :param log_weights: log weights
    :param normalized: self-normalize the weights
    :return: (estimate, effective sample size)
    """
    values = np.asarray(values, dtype=float).ravel()
    log_weights = np.asarray(log_weights, dtype=float).ravel()
    if values.shape != log_weights.shape or values.size == 0:
        raise InsufficientSamplesException("values and log_weights must be nonempty and of equal length")
    order = np.lexsort((log_weights, values))
    values, log_weights = values[order], log_weights[order]
    ess = effective_sample_size(log_weights)
    if normalized:
        weights = np.exp(log_weights - np.max(log_weights))
        total = np.sum(weights)
        mean = float(np.sum(weights * values) / total)
        se = float(np.sqrt(np.sum(weights ** 2 * (values - mean) ** 2)) / total)
        return Estimate(mean=mean, se=se, n=values.size), ess
    return Estimate.from_samples(np.exp(log_weights) * values), ess


def weighted_mean_test(values, log_weights, target: float, k_se: float = K_SE,
                       normalized: bool = True) -> WeightedMeanResult:
    """
    Tests |weighted mean - target| <= k_se * SE.

    :param values: values
    :param log_weights: log weights (zeros for a plain mean)
    :param target: expected value
    :param k_se: decision multiplier
    :param normalized: self-normalized (True) or plain (False) weighting
    :return: weighted mean result
    """
    estimate, ess = weighted_estimate(values, log_weights, normalized=normalized)
    if ess < MIN_EFFECTIVE_SAMPLE_SIZE:
        raise InsufficientSamplesException(
            f"effective sample size {ess:.1f} below {MIN_EFFECTIVE_SAMPLE_SIZE}; refusing weighted mean verdict"
        )
    passed = abs(estimate.mean - target) <= k_se * estimate.se
    logger.debug(f"weighted mean {estimate.mean:.6g} +- {estimate.se:.3g} vs {target:.6g} (ess {ess:.0f})")
    return WeightedMeanResult(passed=passed, estimate=estimate, target=target, k_se=k_se, ess=ess,
                              normalized=normalized)


def estimates_agree(first: Estimate, second: Estimate, k_se: float = K_SE) -> bool:
    """Two independent estimates agree when their difference is within k_se combined standard errors"""
    return first.minus(second).within(0.0, k_se)


def integrated_autocorrelation_time(series, batches: int = BATCH_MEANS_BATCHES) -> float:
    """
    Integrated autocorrelation time of a chain from the ratio of batch-means and naive variances.

    :param series: chain output in time order
    :param batches: batch count
    :return: tau >= 0 (1 for an uncorrelated chain)
    """
    series = np.asarray(series, dtype=float).ravel()
    variance = np.var(series, ddof=1)
    if variance == 0 or series.size < 2 * batches:
        return 1.0
    batched = Estimate.from_batch_means(series, batches)
    return float(batched.se ** 2 * series.size / variance)


def _is_ensemble(obj) -> bool:
    return hasattr(obj, "heights") and hasattr(obj, "times")


def _snapshot_stack(trajectories) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    """Groups trajectories by N into (times, coefficients[replica, time, K]) stacks"""
    if _is_ensemble(trajectories):
        return {trajectories.n: (trajectories.times, trajectories.coefficients)}
    stacks: Dict[int, Tuple[np.ndarray, List[np.ndarray]]] = {}
    for trajectory in trajectories:
        if _is_ensemble(trajectory):
            times, coefficient_list = stacks.setdefault(trajectory.n, (np.asarray(trajectory.times), []))
            coefficient_list.append(trajectory.coefficients)
            continue
        times, coefficient_list = stacks.setdefault(trajectory.n, (np.asarray(trajectory.times), []))
        coefficient_list.append(trajectory.coefficients()[None])
    return {n: (times, np.concatenate(rows, axis=0)) for n, (times, rows) in stacks.items()}


def increment_moment_report(
        trajectories: Union[Sequence, Any],
        h_set: Dict[str, SpectralVector],
        pairs: Sequence[Tuple[float, float]],
) -> List[IncrementRow]:
    """
    Empirical increment moments of rescaled trajectories.

    For each N, h and (s, t) the row holds E[<Y_t - Y_s, h>^2] / (||h||^2 (t - s)) with its SE; an extra row per
    (N, s, t) with h_id 'H-1' holds E||Y_t - Y_s||_{-1}^2 / (t - s). Pairs with s = t are rejected.

    :param trajectories: RescaledTrajectory list and/or RescaledEnsemble objects
    :param h_set: test directions by id, as sine coefficients
    :param pairs: observation time pairs (s, t)
    :return: report rows
    """
    rows: List[IncrementRow] = []
    for n, (times, coefficients) in sorted(_snapshot_stack(trajectories).items()):
        replicas = coefficients.shape[0]
        reliable = replicas >= MIN_TRAJECTORIES_FOR_SE
        if not reliable:
            emit_warning(logger, f"N={n}: {replicas} trajectories, standard errors unreliable",
                         UnreliableEstimateWarning)
        cutoff = coefficients.shape[-1]
        weights = np.arange(1, cutoff + 1, dtype=float) ** -2.0
        for s, t in pairs:
            if not t > s:
                logger.warning(f"rejected increment pair (s={s}, t={t}): needs s < t")
                continue
            i, j = int(np.argmin(np.abs(times - s))), int(np.argmin(np.abs(times - t)))
            if not (np.isclose(times[i], s) and np.isclose(times[j], t)):
                logger.warning(f"rejected increment pair (s={s}, t={t}): not among observation times")
                continue
            increment = coefficients[:, j, :] - coefficients[:, i, :]
            gap = t - s
            for h_id, h in h_set.items():
                k = min(h.cutoff, cutoff)
                projection = increment[:, :k] @ h.coeffs[:k]
                estimate = Estimate.from_samples(projection ** 2).scaled(1.0 / (float(h.coeffs @ h.coeffs) * gap))
                rows.append(IncrementRow(n=n, s=s, t=t, h_id=h_id, ratio=estimate.mean, se=estimate.se,
                                         replicas=replicas, reliable=reliable))
            estimate = Estimate.from_samples(increment ** 2 @ weights).scaled(1.0 / gap)
            rows.append(IncrementRow(n=n, s=s, t=t, h_id=H_MINUS_ONE_ID, ratio=estimate.mean, se=estimate.se,
                                     replicas=replicas, reliable=reliable))
    return rows


def ratio_bound_check(rows: Sequence[IncrementRow], bound: float = 4.0, k_se: float = K_SE) -> bool:
    """True when every directional ratio satisfies ratio <= bound + k_se * se"""
    return all(row.ratio <= bound + k_se * row.se for row in rows if row.h_id != H_MINUS_ONE_ID)


def holder_slope(rows: Sequence[IncrementRow], n: int) -> Tuple[float, float]:
    """
    Regression slope of log sqrt(E||Y_t - Y_s||_{-1}^2) against log(t - s) for one N.

    :param rows: report rows
    :param n: lattice size
    :return: (slope, slope standard error)
    """
    selected = [row for row in rows if row.h_id == H_MINUS_ONE_ID and row.n == n]
    if len(selected) < 2:
        raise InsufficientSamplesException(f"holder_slope needs at least two gaps for N={n}")
    gaps = np.array([row.t - row.s for row in selected])
    moments = np.array([row.ratio for row in selected]) * gaps
    fit = stats.linregress(np.log(gaps), 0.5 * np.log(moments))
    return float(fit.slope), float(fit.stderr)


def growth_in_n_check(rows: Sequence[IncrementRow], h_id: str, s: float, t: float, k_se: float = K_SE) -> bool:
    """
    No-growth test of the increment ratio across N: the regression slope of ratio against log N must not
    exceed k_se standard errors.

    :param rows: report rows spanning several N
    :param h_id: direction id
    :param s: pair start
    :param t: pair end
    :return: True when no significant growth is found
    """
    selected = sorted((row for row in rows if row.h_id == h_id and np.isclose(row.s, s) and np.isclose(row.t, t)),
                      key=lambda row: row.n)
    if len(selected) < 3:
        return all(later.ratio <= earlier.ratio + k_se * np.hypot(earlier.se, later.se)
                   for earlier, later in zip(selected, selected[1:]))
    fit = stats.linregress(np.log([row.n for row in selected]), [row.ratio for row in selected])
    return bool(fit.slope <= k_se * fit.stderr)
