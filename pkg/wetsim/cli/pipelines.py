"""
Simulation pipelines of the command line: every runner takes the run config, its validated keys and an artifact
writer, writes its data files and returns a JSON-serializable summary for the manifest.
"""
from typing import Any, Dict, List

import numpy as np

from wetsim.cli.artifacts import ArtifactWriter
from wetsim.cli.models import ContinuumKeys, LatticeKeys, ReportKeys, RunConfig, SpdeKeys, StaticKeys
from wetsim.constants import KS_THRESHOLD_SCHEME
from wetsim.continuum.bessel import (
    simulate_bessel3_ensemble,
    simulate_coupled_ensemble,
    simulate_squared_ensemble,
    simulate_truncated_ensemble,
)
from wetsim.continuum.models import ContinuumConfig
from wetsim.continuum.mollifier import MollifierSpec
from wetsim.continuum.weights import euler_log_weights, girsanov_log_weights
from wetsim.core.interpolation import affine_grid_values
from wetsim.core.models import SeedSpec, SpectralVector, TimeGrid
from wetsim.core.spectral import negative_sobolev_norm_array, sine_coefficients_array
from wetsim.exceptions import ConfigurationException
from wetsim.lattice_dynamics.dynamics import simulate_rescaled_ensemble
from wetsim.lattice_dynamics.models import RescaledEnsemble
from wetsim.log import Loggers
from wetsim.spde.models import SpdeConfig
from wetsim.spde.scheme import attraction_localization, invariant_law_check, simulate_spde_ensemble
from wetsim.static_models.gibbs import pinning_beta_scan, sample_pinning_chains, sample_strip_chains
from wetsim.static_models.models import PinningParams, ReferenceKind, ReferencePathLaw, StripPotential
from wetsim.static_models.reference_paths import sample_reference_ensemble
from wetsim.stats.distributions import reflecting_bm_cdf
from wetsim.stats.models import Estimate
from wetsim.stats.verdicts import (
    cdf_order_check,
    increment_moment_report,
    ks_statistic,
    ks_two_sample,
    weighted_estimate,
    weighted_mean_test,
)

logger = Loggers.get_named_logger("WETSIM_PIPELINES")

ETA_SWEEP = [0.4, 0.2, 0.1, 0.05]


def strip_potential(keys) -> StripPotential:
    """Potential from a, beta or the normalization weight = a exp(beta)"""
    shape = getattr(keys, "shape", None)
    extra = {"shape": shape} if shape is not None else {}
    if keys.weight is not None:
        return StripPotential.normalized(keys.a, keys.weight, **extra)
    return StripPotential(a=keys.a, beta=keys.beta, **extra)


def unit_direction(k: int, cutoff: int) -> SpectralVector:
    coeffs = np.zeros(cutoff)
    coeffs[k - 1] = 1.0
    return SpectralVector(coeffs=coeffs)


def run_sample_static(config: RunConfig, keys: StaticKeys, writer: ArtifactWriter) -> Dict[str, Any]:
    seed = SeedSpec(master_seed=config.seed, stream_label="static")
    if keys.model == "reference":
        law = ReferencePathLaw(kind=keys.reference_kind, start=keys.reference_start, grid=TimeGrid(steps=keys.steps))
        ensemble = sample_reference_ensemble(law, keys.replicas, seed)
        writer.write_csv("reference", ["replica", "endpoint", "log_weight"],
                         ((i, float(x), float(w)) for i, (x, w) in enumerate(zip(ensemble.endpoints,
                                                                                ensemble.log_weights))))
        estimate, ess = weighted_estimate(ensemble.endpoints, ensemble.log_weights,
                                          normalized=keys.reference_kind != ReferenceKind.MEANDER)
        return {"kind": keys.reference_kind.value, "endpoint_mean": estimate.dict(), "ess": ess}
    if keys.model == "pinning":
        chains = sample_pinning_chains(PinningParams(beta=keys.beta, n=keys.n), keys.chains, keys.kept, seed,
                                       keys.burn_in, keys.thin)
    else:
        chains = sample_strip_chains(keys.n, strip_potential(keys), keys.chains, keys.kept, seed, keys.burn_in,
                                     keys.thin)
    samples = chains.samples
    header = ["chain", "sample"] + [f"phi_{i + 1}" for i in range(keys.n)]
    writer.write_csv("samples", header, (
        [c, k] + [float(v) for v in samples[c, k]] for c in range(samples.shape[0]) for k in range(samples.shape[1])
    ))
    return {
        "model": keys.model,
        "site_means": samples.mean(axis=(0, 1)),
        "zero_fraction": Estimate.from_samples((samples == 0.0).mean(axis=(1, 2))).dict(),
        "burn_in": chains.burn_in,
        "thin": chains.thin,
        "autocorrelation_time": chains.autocorrelation_time,
    }


def run_simulate_lattice(config: RunConfig, keys: LatticeKeys, writer: ArtifactWriter) -> Dict[str, Any]:
    if any(t > keys.T for t in keys.obs_times):
        raise ConfigurationException(f"obs_times must lie in [0, {keys.T}]")
    ensemble = simulate_rescaled_ensemble(keys.n, strip_potential(keys), keys.obs_times, keys.replicas,
                                          SeedSpec(master_seed=config.seed), dt_micro=keys.dt_micro)
    ensemble = RescaledEnsemble(n=ensemble.n, times=ensemble.times, heights=ensemble.heights, cutoff=keys.cutoff)
    heights = ensemble.heights
    writer.write_csv("heights", ["replica", "t", "site", "value"], (
        (r, float(t), i + 1, float(heights[r, j, i]))
        for r in range(heights.shape[0]) for j, t in enumerate(ensemble.times) for i in range(keys.n)
    ))
    times = list(ensemble.times)
    pairs = [(s, t) for s, t in zip(times, times[1:]) if t > s]
    rows = increment_moment_report(ensemble, {"e1": unit_direction(1, keys.cutoff),
                                              "e2": unit_direction(2, keys.cutoff)}, pairs)
    writer.write_csv("increments", ["n", "s", "t", "h", "ratio", "se", "replicas", "reliable"],
                     ((row.n, row.s, row.t, row.h_id, row.ratio, row.se, row.replicas, row.reliable) for row in rows))
    return {"n": keys.n, "replicas": ensemble.replicas, "increment_rows": len(rows)}


def _grid(keys: ContinuumKeys) -> TimeGrid:
    return TimeGrid(t0=0.0, t1=keys.T, steps=keys.steps)


def run_simulate_continuum(config: RunConfig, keys: ContinuumKeys, writer: ArtifactWriter) -> Dict[str, Any]:
    seed = SeedSpec(master_seed=config.seed, stream_label=f"continuum-{keys.law}")
    grid = _grid(keys)
    if keys.law == "truncated":
        if keys.eta <= 0:
            raise ConfigurationException("the truncated SDE needs eta > 0")
        cfg = ContinuumConfig(a=keys.a, eta=keys.eta, eps=keys.eps, grid=grid)
        ensemble = simulate_truncated_ensemble(cfg, keys.replicas, seed, keys.obs_times, keys.kernel_eps)
        writer.write_csv("paths", ["replica", "endpoint", "local_time", "minimum", "crossings"], (
            (i, float(x), float(lt), float(m), int(c)) for i, (x, lt, m, c) in enumerate(
                zip(ensemble.endpoints, ensemble.local_time, ensemble.minimum, ensemble.crossings))
        ))
        summary = {"endpoint_mean": Estimate.from_samples(ensemble.endpoints).dict(),
                   "local_time_mean": Estimate.from_samples(ensemble.local_time).dict()}
        if keys.a == 0:
            ks = ks_statistic(ensemble.endpoints, lambda x: reflecting_bm_cdf(keys.T, x), KS_THRESHOLD_SCHEME)
            summary["ks_reflecting_bm"] = ks.dict(by_alias=True)
        return summary
    if keys.law == "bessel3":
        mollifier = MollifierSpec(eps=keys.eps) if keys.eps is not None and keys.eta > 0 else None
        level = keys.eta if keys.eta > 0 else None
        ensemble = simulate_bessel3_ensemble(keys.a, grid, keys.replicas, seed, keys.obs_times, level,
                                             keys.kernel_eps, mollifier)
        log_weights = girsanov_log_weights(ensemble, keys.a, keys.eta) if level else np.zeros(ensemble.replicas)
        euler_weights = euler_log_weights(ensemble, keys.eta) if level else np.zeros(ensemble.replicas)
        writer.write_csv("paths", ["replica", "endpoint", "local_time", "log_weight", "euler_log_weight"], (
            (i, float(x), float(lt), float(w), float(e))
            for i, (x, lt, w, e) in enumerate(zip(ensemble.endpoints, ensemble.local_time, log_weights, euler_weights))
        ))
        summary = {"endpoint_mean": Estimate.from_samples(ensemble.endpoints).dict()}
        if level:
            ones = np.ones(ensemble.replicas)
            summary["martingale_mean"] = weighted_mean_test(ones, log_weights, 1.0, normalized=False).dict()
            summary["euler_martingale_mean"] = weighted_mean_test(ones, euler_weights, 1.0, normalized=False).dict()
        return summary
    if keys.law == "coupled":
        obs_times = keys.obs_times or [keys.T]
        coupled = simulate_coupled_ensemble(keys.etas, keys.a, grid, keys.replicas, seed, obs_times)
        writer.write_csv("marginals", ["eta", "t", "replica", "value"], (
            (float(eta), float(t), r, float(coupled.snapshots[e, r, j]))
            for e, eta in enumerate(coupled.etas) for j, t in enumerate(coupled.obs_times)
            for r in range(coupled.snapshots.shape[1])
        ))
        checks = [
            cdf_order_check(coupled.marginal(low, t), coupled.marginal(high, t), 0.01).dict()
            for low, high in zip(coupled.etas, coupled.etas[1:]) for t in coupled.obs_times
        ]
        return {"etas": coupled.etas, "order_checks": checks,
                "path_violation_rate": coupled.path_violation_rate,
                "point_violation_rate": coupled.point_violation_rate}
    z = simulate_squared_ensemble(keys.a, keys.eta, grid, keys.replicas, seed)
    writer.write_csv("squared", ["replica", "z", "sqrt_z"], ((i, float(v), float(np.sqrt(v))) for i, v in enumerate(z)))
    summary = {"z_mean": Estimate.from_samples(z).dict()}
    if keys.eta > 0:
        cfg = ContinuumConfig(a=keys.a, eta=keys.eta, grid=grid)
        direct = simulate_truncated_ensemble(cfg, keys.replicas, seed.derive(stream_label="continuum-squared-x"),
                                             functionals=False)
        summary["ks_sqrt_z_vs_x"] = ks_two_sample(np.sqrt(z), direct.endpoints).dict(by_alias=True)
    return summary


def spde_config(keys: SpdeKeys) -> SpdeConfig:
    dt = keys.dt if keys.dt is not None else (1.0 / keys.n_space) ** 2 / 8.0
    return SpdeConfig(n_space=keys.n_space, dt=dt, eta=keys.eta, eps=keys.eps, a=keys.a, attraction=keys.attraction,
                      endpoint_tilt=keys.endpoint_tilt).check_stability()


def run_simulate_spde(config: RunConfig, keys: SpdeKeys, writer: ArtifactWriter) -> Dict[str, Any]:
    cfg = spde_config(keys)
    seed = SeedSpec(master_seed=config.seed)
    ensemble = simulate_spde_ensemble(cfg, keys.replicas, seed, keys.burn_in, keys.duration, keys.sample_every,
                                      init=keys.init, scheme=keys.scheme, oracle_replicas=keys.oracle_replicas)
    writer.write_csv("endpoint", ["replica", "t", "u1"], (
        (r, float(t), float(ensemble.endpoint_samples[r, k]))
        for r in range(ensemble.replicas) for k, t in enumerate(ensemble.sample_times)
    ))
    end_time = keys.burn_in + keys.duration
    writer.write_csv("snapshot", ["t", "x", "u"], (
        (float(end_time), float(x), float(u)) for x, u in zip(np.concatenate([[0.0], cfg.sites]),
                                                            np.concatenate([[cfg.a], ensemble.final[0]]))
    ))
    ks = invariant_law_check(ensemble, seed, keys.oracle_replicas)
    return {
        "n_space": cfg.n_space, "dt": cfg.dt, "eta": cfg.eta, "eps": cfg.eps, "seed": config.seed,
        "steps": int(round((keys.burn_in + keys.duration) / cfg.dt)),
        "complementarity": ensemble.complementarity, "minimum": ensemble.minimum,
        "strip_fraction": Estimate.from_samples(ensemble.strip_fraction).dict(),
        "acceptance_rate": ensemble.acceptance_rate, "ks_oracle": ks.dict(by_alias=True),
    }


def _eta_sweep(config: RunConfig, scale: float) -> List[Dict[str, Any]]:
    replicas = max(int(1e5 * scale), 100)
    grid = TimeGrid(steps=10000)
    rows = []
    for eta in ETA_SWEEP:
        cfg = ContinuumConfig(a=0.0, eta=eta, grid=grid)
        ensemble = simulate_truncated_ensemble(cfg, replicas, SeedSpec(master_seed=config.seed,
                                                                       stream_label=f"sweep-{eta!r}"),
                                               functionals=False)
        ks = ks_statistic(ensemble.endpoints, lambda x: reflecting_bm_cdf(1.0, x), KS_THRESHOLD_SCHEME)
        rows.append({"eta": eta, "ks": ks.statistic, "n": ks.n})
    return rows


def _beta_scan(config: RunConfig, scale: float) -> List[Dict[str, Any]]:
    betas = [float(b) for b in np.linspace(-1.0, 3.0, 9)]
    chains = max(int(64 * scale), 4)
    scan = pinning_beta_scan(16, betas, chains, 200, SeedSpec(master_seed=config.seed, stream_label="beta-scan"))
    return [{"beta": beta, "zero_fraction": estimate.mean, "se": estimate.se} for beta, estimate in scan]


def _lattice_h1(config: RunConfig, scale: float) -> List[Dict[str, Any]]:
    resolution, cutoff = 256, 64
    samples = max(int(20000 * scale), 200)
    seed = SeedSpec(master_seed=config.seed, stream_label="lattice-h1")
    law = ReferencePathLaw(kind=ReferenceKind.REFLECTING_BM, grid=TimeGrid(steps=resolution))
    reference = sample_reference_ensemble(law, samples, seed.derive(stream_label="lattice-h1-reference"))
    reference_norms = negative_sobolev_norm_array(sine_coefficients_array(reference.paths, resolution, cutoff), 1.0)
    rows = []
    for n in (8, 16, 32):
        chains = sample_strip_chains(n, StripPotential.normalized(0.5), min(samples, 1000), -(-samples // 1000),
                                     seed.derive(stream_label=f"lattice-h1-{n}"))
        coeffs = sine_coefficients_array(affine_grid_values(chains.flat, resolution), resolution, cutoff)
        norms = negative_sobolev_norm_array(coeffs, 1.0)
        rows.append({"n": n, "h1_squared": Estimate.from_samples(norms ** 2).dict(),
                     "reference_h1_squared": Estimate.from_samples(reference_norms ** 2).dict(),
                     "ks_to_reference": ks_two_sample(norms, reference_norms).statistic})
    return rows


def _spde_localization(config: RunConfig, scale: float) -> Dict[str, Any]:
    keys = SpdeKeys(replicas=max(int(1000 * scale), 16), oracle_replicas=max(int(20000 * scale), 500))
    seed = SeedSpec(master_seed=config.seed, stream_label="localization")
    runs = []
    for attraction in (True, False):
        cfg = spde_config(keys.copy(update={"attraction": attraction}))
        runs.append(simulate_spde_ensemble(cfg, keys.replicas, seed, keys.burn_in, keys.duration, keys.sample_every,
                                           oracle_replicas=keys.oracle_replicas))
    passed, difference = attraction_localization(*runs)
    return {"passed": passed, "difference": difference.dict()}


def _spde_refinement(config: RunConfig, scale: float) -> List[Dict[str, Any]]:
    rows = []
    for n_space in (32, 64):
        keys = SpdeKeys(n_space=n_space, replicas=max(int(1000 * scale), 16),
                        oracle_replicas=max(int(20000 * scale), 500))
        seed = SeedSpec(master_seed=config.seed, stream_label=f"refinement-{n_space}")
        ensemble = simulate_spde_ensemble(spde_config(keys), keys.replicas, seed, keys.burn_in, keys.duration,
                                          keys.sample_every, oracle_replicas=keys.oracle_replicas)
        rows.append({"n_space": n_space, "ks": invariant_law_check(ensemble, seed, keys.oracle_replicas).statistic})
    return rows


REPORTS = {
    "eta-sweep": _eta_sweep,
    "beta-scan": _beta_scan,
    "lattice-h1": _lattice_h1,
    "spde-localization": _spde_localization,
    "spde-refinement": _spde_refinement,
}


def run_report(config: RunConfig, keys: ReportKeys, writer: ArtifactWriter) -> Dict[str, Any]:
    unknown = [name for name in keys.reports if name not in REPORTS]
    if unknown:
        raise ConfigurationException(f"unknown reports {unknown}, known: {sorted(REPORTS)}")
    results = {}
    for name in keys.reports:
        logger.info(f"exploratory report {name} at scale {keys.scale:g}")
        results[name] = REPORTS[name](config, keys.scale)
        writer.write_json(name, {"report": name, "results": results[name]})
    return {"reports": list(keys.reports)}
