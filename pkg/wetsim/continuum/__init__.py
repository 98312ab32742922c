"""Truncated-drift Bessel SDE, exact Bessel-3 ensembles and their change-of-measure weights"""
from wetsim.continuum.bessel import (
    drift_truncated,
    simulate_bessel3_ensemble,
    simulate_continuum_path,
    simulate_coupled_ensemble,
    simulate_truncated_ensemble,
    step_truncated_bessel,
)
from wetsim.continuum.models import ContinuumConfig, ContinuumEnsemble, ContinuumPath, GirsanovWeight
from wetsim.continuum.mollifier import MollifierSpec
from wetsim.continuum.weights import (
    euler_log_weights,
    girsanov_log_weight,
    girsanov_log_weights,
    local_time_estimate,
    mollified_log_weight,
)
