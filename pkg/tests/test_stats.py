import numpy as np
import pytest
from numpy import testing
from scipy import stats

from wetsim.exceptions import InsufficientSamplesException, UnreliableEstimateWarning
from wetsim.lattice_dynamics.models import RescaledEnsemble
from wetsim.stats.distributions import bessel3_cdf, reflecting_bm_cdf
from wetsim.stats.models import Estimate, IncrementRow, VerdictRecord
from wetsim.stats.verdicts import (
    H_MINUS_ONE_ID,
    cdf_order_check,
    effective_sample_size,
    growth_in_n_check,
    holder_slope,
    increment_moment_report,
    ks_statistic,
    ks_two_sample,
    pure_noise_ks_threshold,
    ratio_bound_check,
    weighted_estimate,
    weighted_ks_distance,
    weighted_mean_test,
)
from wetsim.core.models import SpectralVector


def test_estimate_from_samples():
    estimate = Estimate.from_samples([1.0, 2.0, 3.0])
    assert estimate.mean == pytest.approx(2.0)
    assert estimate.se == pytest.approx(1.0 / np.sqrt(3.0))
    assert estimate.within(2.0 + 2.9 * estimate.se)
    assert not estimate.within(2.0 + 3.1 * estimate.se)


def test_estimate_difference_adds_variances():
    difference = Estimate(mean=1.0, se=3.0, n=10).minus(Estimate(mean=0.5, se=4.0, n=20))
    assert difference.mean == pytest.approx(0.5)
    assert difference.se == pytest.approx(5.0)


def test_pure_noise_threshold():
    assert pure_noise_ks_threshold(100) == pytest.approx(1.36 / 10.0 * 1.5)


def test_ks_statistic_of_midpoint_quantiles():
    n = 50
    samples = (np.arange(n) + 0.5) / n
    result = ks_statistic(samples, stats.uniform.cdf, threshold=0.02)
    assert result.statistic == pytest.approx(0.5 / n)
    assert result.passed


def test_ks_statistic_invariant_under_monotone_relabeling(rng):
    samples = rng.standard_normal(300)
    direct = ks_statistic(samples, stats.norm.cdf)
    relabeled = ks_statistic(np.exp(samples), lambda y: stats.norm.cdf(np.log(y)))
    assert relabeled.statistic == pytest.approx(direct.statistic, abs=1e-12)


def test_ks_needs_samples():
    with pytest.raises(InsufficientSamplesException):
        ks_statistic([], stats.norm.cdf)


def test_ks_result_serializes_pass_alias():
    result = ks_two_sample([0.0, 1.0, 2.0], [0.0, 1.0, 2.0])
    assert result.statistic == 0.0
    assert result.dict(by_alias=True)["pass"] is True


def test_weighted_ks_with_equal_weights_matches_two_sample(rng):
    samples, reference = rng.random(200), rng.random(300)
    weighted = weighted_ks_distance(samples, reference, np.zeros(300), threshold=0.1)
    assert weighted.statistic == pytest.approx(ks_two_sample(samples, reference).statistic)


def test_cdf_order_check_detects_domination(rng):
    low = rng.standard_normal(2000)
    assert cdf_order_check(low, low + 1.0, tolerance=0.01).passed
    reversed_check = cdf_order_check(low + 1.0, low, tolerance=0.01)
    assert not reversed_check.passed
    assert reversed_check.max_violation > 0.3


def test_weighted_estimate_is_order_invariant(rng):
    values, log_weights = rng.standard_normal(500), 0.3 * rng.standard_normal(500)
    order = rng.permutation(500)
    first, first_ess = weighted_estimate(values, log_weights)
    second, second_ess = weighted_estimate(values[order], log_weights[order])
    assert first == second
    assert first_ess == second_ess


def test_effective_sample_size():
    assert effective_sample_size(np.zeros(40)) == pytest.approx(40.0)
    assert effective_sample_size(np.array([0.0, -np.inf])) == pytest.approx(1.0)


def test_weighted_mean_test_on_symmetric_values(rng):
    half = rng.standard_normal(500)
    result = weighted_mean_test(np.concatenate([half, -half]), np.zeros(1000), 0.0)
    assert result.passed
    assert result.estimate.mean == pytest.approx(0.0, abs=1e-12)
    assert result.dict(by_alias=True)["pass"] is True


def test_weighted_mean_test_refuses_low_ess():
    with pytest.raises(InsufficientSamplesException):
        weighted_mean_test(np.ones(50), np.zeros(50), 1.0)


def test_increment_report_rejects_equal_times(rng):
    heights = np.abs(rng.standard_normal((20, 3, 2)))
    ensemble = RescaledEnsemble(n=2, times=[0.0, 0.5, 1.0], heights=heights, cutoff=4)
    h_set = {"e1": SpectralVector(coeffs=[1.0, 0.0, 0.0, 0.0])}
    with pytest.warns(UnreliableEstimateWarning):
        rows = increment_moment_report(ensemble, h_set, [(0.5, 0.5), (0.0, 1.0)])
    assert [(row.s, row.t, row.h_id) for row in rows] == [(0.0, 1.0, "e1"), (0.0, 1.0, H_MINUS_ONE_ID)]
    assert not rows[0].reliable
    increment = ensemble.coefficients[:, 2, 0] - ensemble.coefficients[:, 0, 0]
    assert rows[0].ratio == pytest.approx(np.mean(increment ** 2))


def _row(n, s, t, ratio, se=0.0, h_id=H_MINUS_ONE_ID):
    return IncrementRow(n=n, s=s, t=t, h_id=h_id, ratio=ratio, se=se, replicas=2000, reliable=True)


def test_ratio_bound_check():
    assert ratio_bound_check([_row(8, 0.0, 0.1, 4.2, se=0.1, h_id="e1"), _row(8, 0.0, 0.1, 100.0)])
    assert not ratio_bound_check([_row(8, 0.0, 0.1, 4.5, se=0.1, h_id="e1")])


def test_holder_slope_of_brownian_scaling():
    rows = [_row(8, 0.0, gap, 1.0) for gap in (0.01, 0.02, 0.04, 0.08)]
    slope, _ = holder_slope(rows, 8)
    assert slope == pytest.approx(0.5)


def test_growth_in_n_check():
    flat = [_row(n, 0.0, 0.1, 2.0, h_id="e1") for n in (8, 16, 32)]
    growing = [_row(n, 0.0, 0.1, ratio, h_id="e1") for n, ratio in ((8, 1.0), (16, 2.0), (32, 3.0))]
    assert growth_in_n_check(flat, "e1", 0.0, 0.1)
    assert not growth_in_n_check(growing, "e1", 0.0, 0.1)


def test_reflecting_bm_cdf():
    assert reflecting_bm_cdf(1.0, 0.0) == 0.0
    assert reflecting_bm_cdf(4.0, 2.0) == pytest.approx(0.682689492, abs=1e-8)
    testing.assert_allclose(reflecting_bm_cdf(1.0, np.array([50.0])), [1.0])


def test_bessel3_cdf_is_maxwell():
    assert bessel3_cdf(1.0, 1.0) == pytest.approx(stats.chi(3).cdf(1.0))


def test_verdict_record_alias():
    record = VerdictRecord(test_id="x", inputs_digest="d", statistic=0.1, threshold=0.2, passed=True, seed=1)
    assert set(record.dict(by_alias=True)) >= {"test_id", "inputs_digest", "statistic", "threshold", "pass", "seed"}
