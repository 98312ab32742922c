import numpy as np
import pytest
from numpy import testing
from pydantic import ValidationError
from scipy import integrate, stats

from wetsim.constants import MOLLIFIER_RAW_MASS
from wetsim.continuum import (
    ContinuumConfig,
    ContinuumPath,
    MollifierSpec,
    drift_truncated,
    girsanov_log_weight,
    local_time_estimate,
    mollified_log_weight,
    simulate_bessel3_ensemble,
    simulate_continuum_path,
    simulate_coupled_ensemble,
    simulate_truncated_ensemble,
    step_truncated_bessel,
)
from wetsim.continuum.bessel import simulate_coupled_family, simulate_squared_ensemble, squared_process_step
from wetsim.continuum.mollifier import raw_mass
from wetsim.continuum.weights import (
    boundary_log_factor,
    count_crossings,
    downcrossing_local_time,
    downcrossings,
    euler_log_likelihood_ratio,
    euler_log_weights,
    girsanov_log_weights,
    novikov_bracket,
    occupation_ito_tanaka,
    richardson_combine,
    richardson_local_time,
)
from wetsim.core.models import TimeGrid
from wetsim.exceptions import (
    BiasWarning,
    ConfigurationException,
    SingularInputException,
)
from wetsim.stats.models import Estimate
from wetsim.utils.parallel import ReplicaExecutor


def stored_path(values) -> ContinuumPath:
    values = np.asarray(values, dtype=float)
    grid = TimeGrid(steps=values.size - 1)
    return ContinuumPath(grid=grid, x=values, b_increments=np.zeros(grid.steps))


def test_truncated_drift():
    assert drift_truncated(0.5, 1.0) == pytest.approx(2.0)
    assert drift_truncated(2.0, 1.0) == 0.0
    with pytest.raises(SingularInputException):
        drift_truncated(0.0, 1.0)


def test_truncated_step_floors_the_drift():
    assert step_truncated_bessel(0.0, 1.0, 0.01, 0.0) == pytest.approx(0.1)
    assert step_truncated_bessel(0.5, 0.1, 0.01, -1.0) == pytest.approx(0.5)
    with pytest.raises(ConfigurationException):
        step_truncated_bessel(-0.1, 1.0, 0.01, 0.0)


def test_squared_step():
    assert squared_process_step(1.0, 0.0, 0.01, 0.1) == pytest.approx(1.21)
    assert squared_process_step(0.0, 0.0, 0.01, 0.5) == pytest.approx(0.03)


def test_mollifier_normalization():
    assert raw_mass() == pytest.approx(MOLLIFIER_RAW_MASS, rel=1e-10)
    mollifier = MollifierSpec(eps=0.2)
    assert mollifier.c == pytest.approx(2.252284, rel=1e-6)
    x = np.linspace(-0.3, 0.3, 6001)
    assert integrate.trapezoid(mollifier.rho(x), x) == pytest.approx(1.0, rel=1e-6)


def test_mollifier_primitive():
    mollifier = MollifierSpec(eps=0.1)
    assert mollifier.primitive(0.0, 0.5) == pytest.approx(0.0)
    assert mollifier.primitive_prime(0.2, 0.5) == pytest.approx(0.0)
    assert mollifier.primitive_prime(0.8, 0.5) == pytest.approx(1.0)
    assert mollifier.primitive_prime(0.5, 0.5) == pytest.approx(0.5, abs=1e-6)
    assert mollifier.primitive(2.0, 0.5) == pytest.approx(1.5, abs=1e-6)
    x = np.array([-0.05, 0.02, 0.07])
    step = 1e-7
    numeric = (mollifier.rho(x + step) - mollifier.rho(x - step)) / (2.0 * step)
    testing.assert_allclose(mollifier.rho_prime(x), numeric, rtol=1e-5)


def test_richardson_factor_depends_on_level():
    assert richardson_combine(1.0, 1.2, 0.5) == pytest.approx((4.0 - 1.2) / 3.0)
    assert richardson_combine(1.0, 1.2, 0.0) == pytest.approx(0.8)
    assert richardson_combine(0.1, 1.0, 0.5) == 0.0


def test_local_time_of_a_linear_path():
    path = stored_path(np.linspace(0.0, 1.0, 1001))
    assert richardson_local_time(path, 0.5, 0.05) == pytest.approx(1.0, abs=1e-3)
    assert richardson_local_time(stored_path(np.linspace(1.0, 2.0, 1001)), 0.5) == 0.0


def test_crossings_and_downcrossings():
    path = stored_path([0.0, 1.0, 0.0, 1.0])
    assert count_crossings(path, 0.5) == 3
    assert downcrossings(path, 0.2, 0.5) == 1
    assert downcrossing_local_time(path, 0.2, 0.5) == pytest.approx(1.0)


def test_ito_tanaka_matches_occupation(rng):
    steps = 1_000_000
    increments = np.sqrt(1.0 / steps) * rng.standard_normal(steps)
    path = stored_path(np.abs(0.5 + np.concatenate([[0.0], np.cumsum(increments)])))
    mollifier = MollifierSpec(eps=0.1)
    direct, ito = occupation_ito_tanaka(path, 0.5, mollifier)
    assert direct > 0
    assert ito == pytest.approx(direct, abs=0.05)
    assert 0.0 <= novikov_bracket(path, 0.5, mollifier) <= 4.0 / 0.25


def test_boundary_factor():
    assert boundary_log_factor(1.0, 1.0, 0.5) == pytest.approx(0.0)
    assert boundary_log_factor(2.0, 0.0, 0.5) == pytest.approx(np.log(0.25))
    assert boundary_log_factor(0.25, 0.0, 0.5) == pytest.approx(0.0)


def test_girsanov_weight_of_a_path_above_the_strip():
    weight = girsanov_log_weight(stored_path(np.ones(101)), 1.0, 0.5)
    assert weight.log_weight == pytest.approx(0.0)
    assert weight.components == (weight.log_boundary, weight.occupation_term)
    with pytest.raises(SingularInputException):
        girsanov_log_weight(stored_path(np.linspace(1.0, 0.0, 11)), 1.0, 0.5)


def test_mollified_weight_needs_narrow_mollifier():
    with pytest.raises(ConfigurationException):
        mollified_log_weight(stored_path(np.ones(11)), 1.0, 0.5, MollifierSpec(eps=0.5))
    with pytest.raises(ValidationError):
        ContinuumConfig(a=0.0, eta=0.5, eps=0.6, grid=TimeGrid(steps=10))


def test_truncated_ensemble(seed):
    cfg = ContinuumConfig(a=0.0, eta=0.5, grid=TimeGrid(steps=200))
    first = simulate_truncated_ensemble(cfg, 40, seed, obs_times=[0.5, 1.0])
    assert first.snapshots.shape == (40, 2)
    testing.assert_array_equal(first.snapshot(1.0), first.endpoints)
    assert np.all(first.endpoints >= 0)
    assert np.all(first.local_time >= 0)
    with pytest.raises(KeyError):
        first.snapshot(0.25)
    ReplicaExecutor.configure(threads=2, chunks=4)
    second = simulate_truncated_ensemble(cfg, 40, seed, obs_times=[0.5, 1.0])
    testing.assert_array_equal(first.endpoints, second.endpoints)
    testing.assert_array_equal(first.local_time, second.local_time)


def test_coarse_grid_warns(seed):
    cfg = ContinuumConfig(a=0.0, eta=0.1, grid=TimeGrid(steps=100))
    with pytest.warns(BiasWarning):
        simulate_truncated_ensemble(cfg, 8, seed)


def test_mollified_functionals_are_recorded(seed):
    cfg = ContinuumConfig(a=0.2, eta=0.5, eps=0.2, grid=TimeGrid(steps=400))
    ensemble = simulate_truncated_ensemble(cfg, 16, seed)
    assert ensemble.occupation.shape == (16,)
    assert np.all(ensemble.occupation >= 0)
    assert np.all(ensemble.bracket <= 4.0 / 0.25 + 1e-12)


def test_bessel3_weights(seed):
    grid = TimeGrid(steps=200)
    ensemble = simulate_bessel3_ensemble(0.5, grid, 32, seed, level=0.5)
    weights = girsanov_log_weights(ensemble, 0.5, 0.5)
    assert weights.shape == (32,)
    assert np.all(np.isfinite(weights))
    assert np.all(np.isfinite(euler_log_weights(ensemble, 0.5)))
    with pytest.raises(ConfigurationException):
        euler_log_weights(ensemble, 0.25)
    with pytest.raises(ConfigurationException):
        euler_log_weights(simulate_bessel3_ensemble(0.5, grid, 4, seed), 0.5)
    with pytest.raises(ConfigurationException):
        girsanov_log_weights(ensemble, 0.5, 0.25)
    with pytest.raises(ConfigurationException):
        simulate_bessel3_ensemble(-1.0, grid, 4, seed)


def test_coupled_ensemble(seed):
    grid = TimeGrid(steps=100)
    coupled = simulate_coupled_ensemble([0.5, 0.1], 0.0, grid, 12, seed, [1.0])
    assert coupled.etas == [0.1, 0.5]
    assert coupled.snapshots.shape == (2, 12, 1)
    assert len(coupled.path_violation_rate) == 1
    testing.assert_array_equal(coupled.marginal(0.5, 1.0), coupled.snapshots[1, :, 0])
    with pytest.raises(ConfigurationException):
        simulate_coupled_ensemble([0.5, 0.5], 0.0, grid, 12, seed, [1.0])


def test_coupled_family_shares_noise(seed):
    grid = TimeGrid(steps=50)
    paths = simulate_coupled_family(
        [ContinuumConfig(eta=0.1, grid=grid), ContinuumConfig(eta=0.5, grid=grid)], seed,
    )
    testing.assert_array_equal(paths[0].b_increments, paths[1].b_increments)
    with pytest.raises(ConfigurationException, match="common start"):
        simulate_coupled_family([ContinuumConfig(eta=0.1, grid=grid), ContinuumConfig(a=1.0, eta=0.5, grid=grid)],
                                seed)
    with pytest.raises(ConfigurationException, match="common time grid"):
        simulate_coupled_family([ContinuumConfig(eta=0.1, grid=grid),
                                 ContinuumConfig(eta=0.5, grid=TimeGrid(steps=60))], seed)
    with pytest.raises(ConfigurationException, match="distinct etas"):
        simulate_coupled_family([ContinuumConfig(eta=0.5, grid=grid), ContinuumConfig(eta=0.5, grid=grid)], seed)


def test_squared_ensemble(seed):
    endpoints = simulate_squared_ensemble(0.5, 0.25, TimeGrid(steps=100), 20, seed)
    assert endpoints.shape == (20,)
    assert np.all(endpoints >= 0)


@pytest.mark.slow
@pytest.mark.parametrize("a, eta", [(0.2, 0.5), (1.0, 0.25)])
def test_exponential_martingale_has_unit_mean(seed, a, eta):
    ensemble = simulate_bessel3_ensemble(a, TimeGrid(steps=500), 20_000, seed, level=eta)
    estimate = Estimate.from_samples(np.exp(euler_log_weights(ensemble, eta)))
    assert estimate.within(1.0, k_se=4.0)


@pytest.mark.parametrize("x", [0.0, 0.05, 0.3, 0.8])
def test_euler_ratio_turns_bessel3_steps_into_euler_steps(x):
    dt, eta = 0.01, 0.5
    scale = np.sqrt(dt)

    def bessel3(y):
        if x == 0:
            return 2.0 * y * y / dt * stats.norm.pdf(y, scale=scale)
        return y / x * stats.norm.pdf(y - x, scale=scale) * -np.expm1(-2.0 * x * y / dt)

    def reweighted(y):
        return float(bessel3(y) * np.exp(euler_log_likelihood_ratio(x, y, eta, dt)))

    mass, _ = integrate.quad(reweighted, 1e-12, x + 1.0, points=[x + scale], limit=200)
    assert mass == pytest.approx(1.0, abs=1e-7)
    floor = max(x, scale)
    mean = x + (dt / floor if floor <= eta else 0.0)
    y = x + 0.05
    euler = stats.norm.pdf(y - mean, scale=scale) + stats.norm.pdf(y + mean, scale=scale)
    assert reweighted(y) == pytest.approx(euler, rel=1e-9)


def test_euler_ratio_needs_positive_endpoint():
    with pytest.raises(SingularInputException):
        euler_log_likelihood_ratio(0.3, 0.0, 0.5, 0.01)


def test_stored_truncated_path(seed):
    cfg = ContinuumConfig(a=0.3, eta=0.5, grid=TimeGrid(steps=400))
    path = simulate_continuum_path(cfg, seed)
    assert path.x[0] == pytest.approx(0.3)
    assert np.all(path.x >= 0)
    assert path.crossings == count_crossings(path, 0.5)
    assert path.local_time_eta >= 0.0
    assert local_time_estimate(path, 0.5, 0.2) >= 0.0
    again = simulate_continuum_path(cfg, seed)
    testing.assert_array_equal(path.x, again.x)
