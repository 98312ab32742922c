import numpy as np
import pytest
from numpy import testing

from wetsim.core.models import LatticeField
from wetsim.exceptions import (
    ConfigurationException,
    NonEquilibriumWarning,
    UnsupportedPotentialException,
)
from wetsim.lattice_dynamics import (
    DynamicsState,
    grad_potential,
    simulate_rescaled,
    simulate_rescaled_ensemble,
    step_reflected_system,
)
from wetsim.lattice_dynamics.dynamics import record_steps
from wetsim.static_models.models import PotentialShape, StripPotential
from wetsim.utils.parallel import ReplicaExecutor

FLAT = StripPotential(a=0.5, beta=0.0)


def test_gradient_without_reward():
    testing.assert_allclose(grad_potential(LatticeField.from_values([1.0, 2.0]), FLAT), [0.0, 1.0])


def test_gradient_includes_reward(strip_potential):
    field = LatticeField.from_values([0.25])
    expected = 0.25 - strip_potential.derivative(0.25)
    testing.assert_allclose(grad_potential(field, strip_potential), [expected])


def test_zero_noise_step_is_gradient_descent(seed):
    state = DynamicsState.start(LatticeField.from_values([1.0, 2.0]))
    moved = step_reflected_system(state, FLAT, 0.1, seed, noise=[0.0, 0.0])
    testing.assert_allclose(moved.x.values, [1.0, 1.9])
    testing.assert_array_equal(moved.ell, [0.0, 0.0])
    assert moved.t == pytest.approx(0.1)


def test_step_clamps_at_the_wall(seed):
    state = DynamicsState.start(LatticeField.from_values([0.01]))
    moved = step_reflected_system(state, FLAT, 0.01, seed, noise=[-1.0])
    trial = 0.01 - 0.01 * 0.01 - np.sqrt(0.02)
    testing.assert_array_equal(moved.x.values, [0.0])
    testing.assert_allclose(moved.ell, [-trial])
    assert moved.contact == 0.0


def test_step_rejects_nonpositive_dt(seed):
    state = DynamicsState.start(LatticeField.from_values([1.0]))
    with pytest.raises(ConfigurationException):
        step_reflected_system(state, FLAT, 0.0, seed)


def test_record_steps():
    micro_step, steps = record_steps(4, [0.0, 0.5], 0.01 / 16)
    assert micro_step == pytest.approx(0.01)
    assert steps == [0, 800]
    micro_step, steps = record_steps(4, [0.0, 0.5])
    assert micro_step == pytest.approx(1e-3)
    assert steps == [0, 8000]


def test_record_steps_checks_micro_step_against_spacing():
    assert record_steps(4, [0.0, 0.02, 0.04], 1e-3)[0] == pytest.approx(0.016)
    with pytest.raises(ConfigurationException, match="dt_micro"):
        record_steps(4, [0.0, 0.01, 0.015], 1e-3)
    with pytest.raises(ConfigurationException):
        record_steps(4, [0.0, 0.5], 0.0)


@pytest.mark.parametrize("times", [[], [0.5, 0.25], [-0.1, 0.2], [0.0, 0.005]])
def test_record_steps_rejects_bad_times(times):
    with pytest.raises(ConfigurationException):
        record_steps(4, times, 0.01 / 16)


def test_ensemble_layout_and_thread_independence(seed, strip_potential):
    first = simulate_rescaled_ensemble(4, strip_potential, [0.0, 0.01], 6, seed, dt_micro=0.01 / 16)
    assert first.heights.shape == (6, 2, 4)
    assert np.all(first.heights >= 0)
    assert first.coefficients.shape == (6, 2, first.cutoff)
    ReplicaExecutor.configure(threads=3, chunks=4)
    second = simulate_rescaled_ensemble(4, strip_potential, [0.0, 0.01], 6, seed, dt_micro=0.01 / 16)
    testing.assert_array_equal(first.heights, second.heights)


def test_trajectory_snapshots(seed, strip_potential):
    ensemble = simulate_rescaled_ensemble(4, strip_potential, [0.0, 0.01, 0.02], 4, seed, dt_micro=0.01 / 16)
    trajectory = ensemble.trajectory(0)
    assert trajectory.times == [0.0, 0.01, 0.02]
    assert len(trajectory.snapshots) == 3
    testing.assert_allclose(trajectory.snapshots[1].values[1:], ensemble.heights[0, 1] / 2.0)


def test_start_away_from_equilibrium_warns(seed, strip_potential):
    init = LatticeField.from_values([1.0, 1.0, 1.0, 1.0])
    with pytest.warns(NonEquilibriumWarning):
        ensemble = simulate_rescaled_ensemble(4, strip_potential, [0.0], 4, seed, dt_micro=0.01 / 16, init=init)
    testing.assert_array_equal(ensemble.heights[:, 0], np.ones((4, 4)))


def test_single_trajectory_horizon(seed, strip_potential):
    init = LatticeField.from_values([0.5, 0.5])
    with pytest.raises(ConfigurationException):
        simulate_rescaled(2, strip_potential, 0.5, [0.0, 1.0], 0.01 / 4, init, seed)
    trajectory = simulate_rescaled(2, strip_potential, 0.5, [0.0, 0.5], 0.01 / 4, init, seed)
    assert len(trajectory.snapshots) == 2


def test_indicator_potential_is_rejected(seed):
    pot = StripPotential(a=0.5, beta=1.0, shape=PotentialShape.INDICATOR)
    with pytest.raises(UnsupportedPotentialException):
        simulate_rescaled_ensemble(4, pot, [0.0], 4, seed)
