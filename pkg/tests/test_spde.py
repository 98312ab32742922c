import numpy as np
import pytest
from numpy import testing
from pydantic import ValidationError

from wetsim.core.random import random_stream
from wetsim.exceptions import ConfigurationException, NonEquilibriumWarning, StabilityException
from wetsim.spde import (
    SpdeConfig,
    SpdeEnsemble,
    SpdeState,
    attraction_drift,
    complementarity_report,
    simulate_spde_ensemble,
    step_spde,
)
from wetsim.spde.scheme import (
    SCHEME_MALA,
    attraction_localization,
    invariant_law_check,
    log_density,
    mala_step,
    simulate_spde_path,
)
from wetsim.utils.parallel import ReplicaExecutor


def spde_config(**overrides) -> SpdeConfig:
    values = dict(n_space=8, dt=1.0 / 512, eta=0.5, eps=0.2)
    values.update(overrides)
    return SpdeConfig(**values)


def test_attraction_points_towards_eta():
    cfg = spde_config()
    assert attraction_drift(0.4, cfg.eta, cfg.mollifier) > 0
    assert attraction_drift(0.6, cfg.eta, cfg.mollifier) < 0
    assert attraction_drift(0.5, cfg.eta, cfg.mollifier) == pytest.approx(0.0)
    assert attraction_drift(0.1, cfg.eta, cfg.mollifier) == 0.0


def test_flat_field_at_eta_is_a_fixed_point(seed):
    cfg = spde_config(a=0.5)
    state = SpdeState.start(np.full(8, 0.5))
    moved = step_spde(state, cfg, seed, noise=np.zeros(8))
    testing.assert_allclose(moved.u, np.full(8, 0.5), atol=1e-12)
    assert moved.t == pytest.approx(cfg.dt)


def test_projection_clamps_only_the_kicked_site(seed):
    cfg = spde_config()
    noise = np.zeros(8)
    noise[3] = -1.0
    moved = step_spde(SpdeState.start(np.full(8, 0.01)), cfg, seed, noise=noise)
    assert moved.clamp_events == 1
    assert moved.u[3] == 0.0
    assert np.all(np.delete(moved.u, 3) > 0)
    assert moved.zeta_mass[3] == pytest.approx(0.99)
    assert complementarity_report(moved) == 0.0


def test_unstable_step_is_refused(seed):
    cfg = spde_config(dt=1.0 / 64)
    with pytest.raises(StabilityException):
        step_spde(SpdeState.start(np.full(8, 0.5)), cfg, seed)
    with pytest.raises(StabilityException):
        cfg.check_stability()


def test_state_size_must_match(seed):
    with pytest.raises(ConfigurationException):
        step_spde(SpdeState.start(np.full(4, 0.5)), spde_config(), seed)


@pytest.mark.parametrize("overrides", [dict(eps=0.5), dict(eps=0.6), dict(n_space=1), dict(dt=0.0)])
def test_invalid_configs(overrides):
    with pytest.raises(ValidationError):
        spde_config(**overrides)


def test_log_density_outside_the_cone():
    cfg = spde_config()
    fields = np.array([np.full(8, 0.5), np.concatenate([np.full(7, 0.5), [0.0]])])
    density = log_density(fields, cfg)
    assert np.isfinite(density[0])
    assert density[1] == -np.inf


def test_metropolis_step_keeps_fields_positive(seed):
    cfg = spde_config(dt=1.0 / 64)
    u = np.full((6, 8), 0.5)
    stream = random_stream(seed)
    for _ in range(20):
        u, accepted = mala_step(u, cfg, stream)
        assert accepted.shape == (6,)
    assert np.all(u > 0)


def test_sequential_path(seed):
    state, recorded = simulate_spde_path(spde_config(), np.full(8, 0.3), 6, seed, record_every=2)
    assert len(recorded) == 3
    assert state.t == pytest.approx(6.0 / 512)
    assert state.complementarity == 0.0


def test_small_ensemble(seed):
    cfg = spde_config()
    first = simulate_spde_ensemble(cfg, 4, seed, burn_in=0.01, duration=0.02, sample_every=0.005,
                                   oracle_replicas=500)
    assert first.endpoint_samples.shape == (4, 3)
    assert len(first.sample_times) == 3
    assert first.final.shape == (4, 8)
    assert first.complementarity == 0.0
    assert first.minimum >= 0.0
    assert first.acceptance_rate is None
    ReplicaExecutor.configure(threads=2, chunks=4)
    second = simulate_spde_ensemble(cfg, 4, seed, burn_in=0.01, duration=0.02, sample_every=0.005,
                                    oracle_replicas=500)
    testing.assert_array_equal(first.endpoint_samples, second.endpoint_samples)
    result = invariant_law_check(first, seed, 500, threshold=1.0)
    assert 0.0 <= result.statistic <= 1.0
    assert result.passed


def test_metropolis_ensemble_reports_acceptance(seed):
    ensemble = simulate_spde_ensemble(spde_config(), 4, seed, burn_in=0.0, duration=0.01, sample_every=0.005,
                                      scheme=SCHEME_MALA, oracle_replicas=500)
    assert 0.0 <= ensemble.acceptance_rate <= 1.0


def test_wall_start_warns(seed):
    with pytest.warns(NonEquilibriumWarning):
        ensemble = simulate_spde_ensemble(spde_config(), 4, seed, burn_in=0.0, duration=0.01, sample_every=0.005,
                                          init="wall")
    assert ensemble.final.shape == (4, 8)


@pytest.mark.parametrize("options", [dict(scheme="leapfrog"), dict(init="somewhere")])
def test_unknown_options(seed, options):
    with pytest.raises(ConfigurationException):
        simulate_spde_ensemble(spde_config(), 4, seed, burn_in=0.0, duration=0.01, sample_every=0.005,
                               oracle_replicas=100, **options)


def test_localization_compares_strip_fractions():
    cfg = spde_config()

    def ensemble(fractions):
        return SpdeEnsemble(cfg=cfg, sample_times=[], endpoint_samples=np.zeros((3, 0)), strip_fraction=fractions,
                            final=np.full((3, 8), 0.5), zeta_total=np.zeros(3), complementarity=0.0, minimum=0.0)

    localized, difference = attraction_localization(ensemble([0.5, 0.6, 0.7]), ensemble([0.0, 0.0, 0.01]))
    assert localized
    assert difference.mean == pytest.approx(0.6 - 0.01 / 3)
    assert not attraction_localization(ensemble([0.0, 0.0, 0.01]), ensemble([0.5, 0.6, 0.7]))[0]
