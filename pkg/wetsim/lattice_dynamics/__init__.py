"""Reflected gradient dynamics of the N-site interface and its diffusive rescaling"""
from wetsim.lattice_dynamics.dynamics import (
    grad_potential,
    simulate_rescaled,
    simulate_rescaled_ensemble,
    step_reflected_system,
)
from wetsim.lattice_dynamics.models import DynamicsState, RescaledEnsemble, RescaledTrajectory
