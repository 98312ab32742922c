"""Statistical verdicts and analytic oracles"""
from wetsim.stats.distributions import half_gaussian_cdf, reflecting_bm_cdf
from wetsim.stats.models import Estimate, KsResult
from wetsim.stats.verdicts import cdf_order_check, increment_moment_report, ks_statistic, weighted_mean_test
