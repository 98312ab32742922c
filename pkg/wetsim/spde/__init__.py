"""Reflected SPDE with mollified attraction and its invariant-law oracle"""
from wetsim.spde.models import SpdeConfig, SpdeEnsemble, SpdeState
from wetsim.spde.scheme import attraction_drift, complementarity_report, simulate_spde_ensemble, step_spde
