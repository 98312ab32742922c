import numpy as np
import pytest
from numpy import testing
from scipy import special

from wetsim.core.models import LatticeField, TimeGrid
from wetsim.exceptions import UnreliableEstimateWarning, UnsupportedLawException, UnsupportedPotentialException
from wetsim.static_models.gibbs import (
    gibbs_sweep_delta_pinning,
    gibbs_sweep_strip,
    pinning_atom_probability,
    pinning_beta_scan,
    pinning_kernel_invariance_error,
    sample_pinning_chains,
    sample_strip_chains,
    strip_kernel_invariance_error,
    zero_fraction,
)
from wetsim.static_models.ibpf import (
    FUNCTIONALS,
    conditional_slice,
    free_end_laplacian,
    gaussian_gradient,
    ibpf_report,
    ibpf_report_mc,
    ibpf_residual,
    ibpf_residual_mc,
)
from wetsim.static_models.models import (
    PinningParams,
    PotentialShape,
    ReferenceKind,
    ReferencePathLaw,
    StripPotential,
)
from wetsim.static_models.reference_paths import imhof_log_weight, sample_reference_ensemble, sample_reference_path


def test_normalized_potential():
    pot = StripPotential.normalized(0.25, weight=2.0)
    assert pot.a * np.exp(pot.beta) == pytest.approx(2.0)


def test_potential_derivative_matches_finite_difference(strip_potential):
    x = np.array([0.1, 0.25, 0.4])
    step = 1e-6
    numeric = (strip_potential.value(x + step) - strip_potential.value(x - step)) / (2.0 * step)
    testing.assert_allclose(strip_potential.derivative(x), numeric, rtol=1e-6)
    testing.assert_array_equal(strip_potential.derivative([0.7]), [0.0])


def test_indicator_potential_is_not_smooth():
    pot = StripPotential(a=0.5, beta=1.0, shape=PotentialShape.INDICATOR)
    with pytest.raises(UnsupportedPotentialException):
        pot.derivative(0.1)
    with pytest.raises(UnsupportedPotentialException):
        sample_strip_chains(2, pot, 2, 2, None)


def test_gaussian_gradient_with_free_end():
    testing.assert_allclose(gaussian_gradient(np.array([1.0, 2.0])), [0.0, 1.0])


def test_free_end_laplacian():
    testing.assert_allclose(free_end_laplacian([1.0, 1.0, 1.0]), [-1.0, 0.0, 0.0])


def test_atom_probability_limits():
    assert pinning_atom_probability(np.array([0.0]), 1.0, 30.0)[0] == pytest.approx(1.0)
    assert pinning_atom_probability(np.array([0.0]), 1.0, -30.0)[0] == pytest.approx(0.0, abs=1e-12)


def test_sweeps_keep_heights_nonnegative(seed, strip_potential):
    field = LatticeField.from_values([0.3, 1.2, 0.0, 2.5])
    swept = gibbs_sweep_strip(field, strip_potential, seed)
    assert np.all(swept.values >= 0)
    testing.assert_array_equal(swept.values, gibbs_sweep_strip(field, strip_potential, seed).values)
    pinned = gibbs_sweep_delta_pinning(field, PinningParams(beta=2.0, n=4), seed)
    assert np.all(pinned.values >= 0)


def test_chain_layout_and_defaults(seed, strip_potential):
    chains = sample_strip_chains(3, strip_potential, 6, 10, seed)
    assert chains.samples.shape == (6, 10, 3)
    assert chains.burn_in == 30
    assert chains.thin == 3
    assert chains.flat.shape == (60, 3)
    assert np.all(chains.samples >= 0)


def test_pinning_chains_produce_exact_zeros(seed):
    samples = sample_pinning_chains(PinningParams(beta=2.0, n=4), 8, 50, seed).samples
    assert np.any(samples == 0.0)


def test_strip_kernel_invariance(strip_potential):
    assert strip_kernel_invariance_error(strip_potential) < 1e-6


@pytest.mark.parametrize("beta", [-1.0, 0.0, 1.5])
def test_pinning_kernel_invariance(beta):
    assert pinning_kernel_invariance_error(beta) < 1e-6


def test_single_site_zero_fraction_matches_closed_form(seed):
    beta = 0.5
    estimate = zero_fraction(PinningParams(beta=beta, n=1), 40, 500, seed)
    exact = special.expit(beta - np.log(np.sqrt(2.0 * np.pi) / 2.0))
    assert estimate.within(exact, k_se=4.0)


def test_beta_scan_increases_zero_fraction(seed):
    scan = pinning_beta_scan(4, [-3.0, 3.0], 16, 100, seed)
    assert [beta for beta, _ in scan] == [-3.0, 3.0]
    assert scan[1][1].mean > scan[0][1].mean + 0.3


@pytest.mark.parametrize("f_id", sorted(FUNCTIONALS))
def test_ibpf_quadrature_single_site(strip_potential, f_id):
    assert ibpf_residual(1, strip_potential, f_id, [1.0]) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("h", [[1.0, 0.0], [1.0, -1.0]])
def test_ibpf_quadrature_two_sites(strip_potential, h):
    report = ibpf_report(2, strip_potential, "exp-sum", h)
    assert report.residual < 1e-4


def test_ibpf_input_checks(strip_potential):
    with pytest.raises(UnsupportedLawException):
        ibpf_residual(2, strip_potential, "exp-sum", [1.0])
    with pytest.raises(UnsupportedLawException):
        ibpf_residual(3, strip_potential, "exp-sum", [1.0, 0.0, 0.0])
    with pytest.raises(UnsupportedLawException):
        ibpf_residual(1, strip_potential, "unknown", [1.0])


def test_ibpf_monte_carlo_at_eight_sites(seed):
    h = np.zeros(8)
    h[0] = 1.0
    pot = StripPotential(a=0.4, beta=1.0)
    estimate = ibpf_residual_mc(8, pot, "exp-sum", h, 20_000, seed)
    assert estimate.se > 0
    assert estimate.within(0.0, k_se=4.0)
    report = ibpf_report_mc(8, pot, "exp-sum", h, 20_000, seed)
    assert report.residual == pytest.approx(estimate.mean)
    assert [s["site"] for s in report.slices] == [1, 1]
    assert all(s["reliable"] for s in report.slices)


def test_ibpf_monte_carlo_warns_on_thin_slices(seed):
    h = np.zeros(8)
    h[0] = 1.0
    with pytest.warns(UnreliableEstimateWarning):
        report = ibpf_report_mc(8, StripPotential(a=0.4, beta=1.0), "exp-sum", h, 50, seed)
    assert not all(s["reliable"] for s in report.slices)


def test_conditional_slice_of_a_uniform_sample(rng):
    samples = rng.uniform(size=(10, 100, 1))
    estimate = conditional_slice(samples, np.ones((10, 100)), 0, 0.5, 0.05)
    assert estimate.site == 1
    assert estimate.reliable
    assert estimate.ess == pytest.approx(2.0 * np.sqrt(np.pi) * 0.05 * 1000, rel=0.25)
    assert estimate.value.within(1.0, k_se=4.0)


def test_reference_paths(seed):
    grid = TimeGrid(steps=32)
    for kind in ReferenceKind:
        ensemble = sample_reference_ensemble(ReferencePathLaw(kind=kind, grid=grid), 40, seed)
        assert ensemble.paths.shape == (40, 33)
        assert np.all(ensemble.paths >= 0)
        testing.assert_allclose(ensemble.paths[:, 0], 0.0)
    meander = sample_reference_ensemble(ReferencePathLaw(kind=ReferenceKind.MEANDER, grid=grid), 40, seed)
    testing.assert_allclose(meander.log_weights, imhof_log_weight(meander.endpoints))


def test_meander_needs_zero_start(seed):
    law = ReferencePathLaw(kind=ReferenceKind.MEANDER_DIRECT, start=0.5, grid=TimeGrid(steps=8))
    with pytest.raises(UnsupportedLawException):
        sample_reference_ensemble(law, 10, seed)


def test_single_meander_path_carries_the_imhof_weight(seed):
    law = ReferencePathLaw(kind=ReferenceKind.MEANDER, grid=TimeGrid(steps=16))
    path = sample_reference_path(law, seed)
    assert path.values.shape == (17,)
    assert path.log_weight == pytest.approx(float(imhof_log_weight(path.values[-1])))
    reflected = sample_reference_path(ReferencePathLaw(kind=ReferenceKind.REFLECTING_BM, start=1.0,
                                                       grid=TimeGrid(steps=16)), seed)
    assert reflected.values[0] == pytest.approx(1.0)
    assert reflected.log_weight == 0.0
