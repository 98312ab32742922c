"""
Acceptance suite of the verify command. Every criterion runs a fixed, pre-registered experiment whose replica
counts are multiplied by ``scale`` and returns machine-readable verdict records.
"""
import pathlib
import tempfile
from typing import Any, Callable, Dict, List

import numpy as np
from scipy import special

from wetsim.cli.artifacts import ArtifactWriter
from wetsim.cli.models import ContinuumKeys, RunConfig, SpdeKeys, VerifyKeys
from wetsim.cli.pipelines import spde_config, unit_direction
from wetsim.constants import K_SE, KS_ASYMPTOTIC_QUANTILE, KS_THRESHOLD_SCHEME, KS_THRESHOLD_SPDE
from wetsim.continuum.bessel import simulate_bessel3_ensemble, simulate_coupled_ensemble, simulate_truncated_ensemble
from wetsim.continuum.models import ContinuumConfig
from wetsim.continuum.weights import euler_log_weights, girsanov_log_weights
from wetsim.core.models import SeedSpec, TimeGrid
from wetsim.exceptions import ConfigurationException, WettingException
from wetsim.lattice_dynamics.dynamics import simulate_rescaled_ensemble
from wetsim.log import Loggers
from wetsim.spde.scheme import invariant_law_check, simulate_spde_ensemble
from wetsim.static_models.gibbs import pinning_kernel_invariance_error, strip_kernel_invariance_error, zero_fraction
from wetsim.static_models.ibpf import FUNCTIONALS, ibpf_residual, ibpf_residual_mc
from wetsim.static_models.models import PinningParams, ReferenceKind, ReferencePathLaw, StripPotential
from wetsim.static_models.reference_paths import sample_reference_ensemble
from wetsim.stats.distributions import reflecting_bm_cdf
from wetsim.stats.models import Estimate, VerdictRecord
from wetsim.stats.verdicts import (
    cdf_order_check,
    estimates_agree,
    growth_in_n_check,
    holder_slope,
    increment_moment_report,
    ks_statistic,
    ratio_bound_check,
    weighted_estimate,
    weighted_mean_test,
)
from wetsim.utils.parallel import ReplicaExecutor
from wetsim.utils.utility import config_digest

logger = Loggers.get_named_logger("WETSIM_VERIFY")

CONVERGENCE_ETAS = [0.4, 0.2, 0.1, 0.05]
MARTINGALE_CASES = [(0.2, 0.5), (1.0, 0.25)]
TIGHTNESS_SIZES = [8, 16, 32]
TIGHTNESS_TIMES = [0.0, 0.0025, 0.005, 0.01, 0.02, 0.04]
IBPF_POTENTIAL = StripPotential(a=0.5, beta=1.0)
IBPF_DIRECTIONS = {1: [[1.0]], 2: [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]]}
IBPF_TOLERANCE = {1: 1e-8, 2: 1e-4}
IBPF_MC_POTENTIAL = StripPotential(a=0.4, beta=1.0)
HOLDER_SLOPE_MIN = 0.45
INVARIANCE_TOLERANCE = 1e-6


class CriterionContext:
    """Seed, scale and verdict factory shared by the criteria"""

    def __init__(self, config: RunConfig, scale: float):
        """Context initializer"""
        self.config = config
        self.scale = scale

    def seed(self, label: str) -> SeedSpec:
        return SeedSpec(master_seed=self.config.seed, stream_label=label)

    def count(self, full: int, floor: int = 100) -> int:
        """Replica count of the full-size experiment multiplied by the scale"""
        return max(int(round(full * self.scale)), floor)

    def verdict(self, test_id: str, inputs: Dict[str, Any], statistic: float, threshold: float, passed: bool,
                detail: str = None) -> VerdictRecord:
        record = VerdictRecord(test_id=test_id, inputs_digest=config_digest(dict(inputs, scale=self.scale)),
                               statistic=float(statistic), threshold=float(threshold), passed=bool(passed),
                               seed=self.config.seed, detail=detail)
        logger.info(f"{test_id}: statistic {record.statistic:.6g} vs {record.threshold:.6g} -> "
                    f"{'pass' if record.passed else 'FAIL'}")
        return record


def continuum_convergence(ctx: CriterionContext) -> List[VerdictRecord]:
    """KS of X_1 against reflecting Brownian motion across eta, and its decrease as eta shrinks"""
    replicas = ctx.count(100_000)
    grid = TimeGrid(steps=10_000)
    statistics = []
    for eta in CONVERGENCE_ETAS:
        cfg = ContinuumConfig(a=0.0, eta=eta, grid=grid)
        ensemble = simulate_truncated_ensemble(cfg, replicas, ctx.seed(f"criterion-1-eta={eta!r}"), functionals=False)
        statistics.append(ks_statistic(ensemble.endpoints, lambda x: reflecting_bm_cdf(1.0, x)).statistic)
    inputs = {"etas": CONVERGENCE_ETAS, "replicas": replicas, "steps": grid.steps}
    slack = KS_ASYMPTOTIC_QUANTILE / np.sqrt(replicas)
    rise = max(later - earlier for earlier, later in zip(statistics, statistics[1:]))
    detail = ", ".join(f"eta={eta:g}: {ks:.4f}" for eta, ks in zip(CONVERGENCE_ETAS, statistics))
    return [
        ctx.verdict("1-ks-reflecting-bm", inputs, statistics[-1], KS_THRESHOLD_SCHEME,
                    statistics[-1] <= KS_THRESHOLD_SCHEME, detail),
        ctx.verdict("1-ks-nonincreasing", inputs, rise, slack, rise <= slack,
                    "largest KS increase between consecutive etas, against the KS noise scale"),
    ]


def stochastic_ordering(ctx: CriterionContext) -> List[VerdictRecord]:
    """CDF ordering of the eta = 0.1 and eta = 0.5 marginals under common noise"""
    replicas = ctx.count(100_000)
    times = [0.5, 1.0]
    coupled = simulate_coupled_ensemble([0.1, 0.5], 0.0, TimeGrid(steps=1000), replicas, ctx.seed("criterion-2"),
                                        times)
    records = []
    for t in times:
        check = cdf_order_check(coupled.marginal(0.1, t), coupled.marginal(0.5, t), 0.01)
        records.append(ctx.verdict(f"2-cdf-order-t={t:g}", {"etas": [0.1, 0.5], "t": t, "replicas": replicas},
                                   check.max_violation, check.tolerance, check.passed,
                                   f"pathwise violation rate {coupled.path_violation_rate[0]:.4g}"))
    return records


def exponential_martingale(ctx: CriterionContext) -> List[VerdictRecord]:
    """
    Unnormalized mean of the exponential martingale over Bessel-3 paths equals one. The verdict uses the grid
    density of the truncated Euler chain; the occupation-time form of the weight is reported alongside.
    """
    replicas = ctx.count(100_000)
    records = []
    for a, eta in MARTINGALE_CASES:
        ensemble = simulate_bessel3_ensemble(a, TimeGrid(steps=1000), replicas,
                                             ctx.seed(f"criterion-3-a={a!r}-eta={eta!r}"), level=eta)
        test = weighted_mean_test(np.ones(replicas), euler_log_weights(ensemble, eta), 1.0, normalized=False)
        occupation_form = Estimate.from_samples(np.exp(girsanov_log_weights(ensemble, a, eta)))
        deviation = abs(test.estimate.mean - 1.0)
        records.append(ctx.verdict(f"3-martingale-a={a:g}-eta={eta:g}", {"a": a, "eta": eta, "replicas": replicas},
                                   deviation, K_SE * test.estimate.se, test.passed,
                                   f"mean {test.estimate.mean:.5f} +- {test.estimate.se:.5f}, ess {test.ess:.0f}; "
                                   f"occupation form {occupation_form.mean:.5f} +- {occupation_form.se:.5f}"))
    return records


def imhof_relation(ctx: CriterionContext) -> List[VerdictRecord]:
    """Weighted Bessel-3 and direct meander estimates of E[exp(-X_1)], in both directions of the density"""
    replicas = ctx.count(100_000)
    grid = TimeGrid(steps=16)
    sample = {
        kind: sample_reference_ensemble(ReferencePathLaw(kind=kind, grid=grid), replicas,
                                        ctx.seed(f"criterion-4-{kind.value}"))
        for kind in (ReferenceKind.MEANDER, ReferenceKind.MEANDER_DIRECT, ReferenceKind.BESSEL3)
    }
    weighted, _ = weighted_estimate(np.exp(-sample[ReferenceKind.MEANDER].endpoints),
                                    sample[ReferenceKind.MEANDER].log_weights, normalized=False)
    direct_end = sample[ReferenceKind.MEANDER_DIRECT].endpoints
    direct = Estimate.from_samples(np.exp(-direct_end))
    tilted = Estimate.from_samples(np.sqrt(2.0 / np.pi) * direct_end * np.exp(-direct_end))
    plain = Estimate.from_samples(np.exp(-sample[ReferenceKind.BESSEL3].endpoints))
    records = []
    for test_id, first, second in (("4-imhof-weighted-vs-meander", weighted, direct),
                                   ("4-imhof-tilted-meander-vs-bessel3", tilted, plain)):
        difference = first.minus(second)
        records.append(ctx.verdict(test_id, {"replicas": replicas, "steps": grid.steps}, abs(difference.mean),
                                   K_SE * difference.se, estimates_agree(first, second),
                                   f"{first.mean:.5f} +- {first.se:.5f} vs {second.mean:.5f} +- {second.se:.5f}"))
    return records


def integration_by_parts(ctx: CriterionContext) -> List[VerdictRecord]:
    """Quadrature residuals at N = 1, 2 and the Monte Carlo residual at N = 8"""
    records = []
    for n, directions in IBPF_DIRECTIONS.items():
        residuals = [ibpf_residual(n, IBPF_POTENTIAL, f_id, h) for f_id in sorted(FUNCTIONALS) for h in directions]
        worst = max(residuals)
        records.append(ctx.verdict(f"5-ibpf-quadrature-n={n}", {"n": n, "a": IBPF_POTENTIAL.a,
                                                                 "beta": IBPF_POTENTIAL.beta},
                                   worst, IBPF_TOLERANCE[n], worst < IBPF_TOLERANCE[n],
                                   f"{len(residuals)} (f, h) pairs"))
    samples = ctx.count(1_000_000, floor=10_000)
    h = np.zeros(8)
    h[0] = 1.0
    estimate = ibpf_residual_mc(8, IBPF_MC_POTENTIAL, "exp-sum", h, samples, ctx.seed("criterion-5-mc"))
    inputs = {"n": 8, "a": IBPF_MC_POTENTIAL.a, "beta": IBPF_MC_POTENTIAL.beta, "samples": samples, "f": "exp-sum",
              "h": "e1"}
    detail = f"h=e1, a={IBPF_MC_POTENTIAL.a:g}: lhs - rhs = {estimate.mean:.3g} +- {estimate.se:.3g}"
    records.append(ctx.verdict("5-ibpf-monte-carlo-n=8", inputs, abs(estimate.mean), K_SE * estimate.se,
                               estimate.within(0.0), detail))
    return records


def tightness(ctx: CriterionContext) -> List[VerdictRecord]:
    """Increment-moment bound, Hoelder slope and no growth in N for equilibrium lattice dynamics"""
    replicas = ctx.count(2000)
    pot = StripPotential.normalized(0.5)
    ensembles = [
        simulate_rescaled_ensemble(n, pot, TIGHTNESS_TIMES, replicas, ctx.seed(f"criterion-6-n={n}"))
        for n in TIGHTNESS_SIZES
    ]
    h_set = {f"e{k}": unit_direction(k, ensembles[0].cutoff) for k in (1, 2, 3)}
    pairs = [(0.0, t) for t in TIGHTNESS_TIMES[1:]] + [(0.02, 0.04)]
    rows = increment_moment_report(ensembles, h_set, pairs)
    inputs = {"sizes": TIGHTNESS_SIZES, "times": TIGHTNESS_TIMES, "replicas": replicas}
    worst = max(row.ratio - K_SE * row.se for row in rows if row.h_id in h_set)
    records = [ctx.verdict("6-ratio-bound", inputs, worst, 4.0, ratio_bound_check(rows),
                           "largest ratio minus 3 SE over N, h and (s, t)")]
    slopes = {n: holder_slope(rows, n)[0] for n in TIGHTNESS_SIZES}
    smallest = min(slopes.values())
    records.append(ctx.verdict("6-holder-slope", inputs, smallest, HOLDER_SLOPE_MIN, smallest >= HOLDER_SLOPE_MIN,
                               ", ".join(f"N={n}: {slope:.3f}" for n, slope in slopes.items())))
    growth = [growth_in_n_check(rows, h_id, s, t) for h_id in h_set for s, t in pairs]
    records.append(ctx.verdict("6-no-growth-in-n", inputs, growth.count(False), 0, all(growth),
                               f"{len(growth)} (h, s, t) slope tests"))
    return records


def spde_invariance(ctx: CriterionContext) -> List[VerdictRecord]:
    """Long SPDE run against the reweighted Bessel-3 oracle, complementarity and positivity"""
    keys = SpdeKeys(replicas=ctx.count(1000, floor=16), oracle_replicas=ctx.count(20000, floor=500))
    cfg = spde_config(keys)
    seed = ctx.seed("criterion-7")
    ensemble = simulate_spde_ensemble(cfg, keys.replicas, seed, keys.burn_in, keys.duration, keys.sample_every,
                                      oracle_replicas=keys.oracle_replicas)
    ks = invariant_law_check(ensemble, seed, keys.oracle_replicas, KS_THRESHOLD_SPDE)
    inputs = keys.dict()
    return [
        ctx.verdict("7-spde-ks-oracle", inputs, ks.statistic, ks.threshold, ks.passed, f"n={ks.n}"),
        ctx.verdict("7-spde-complementarity", inputs, abs(ensemble.complementarity), 0.0,
                    ensemble.complementarity == 0.0),
        ctx.verdict("7-spde-nonnegative", inputs, -ensemble.minimum, 0.0, ensemble.minimum >= 0.0,
                    f"minimum {ensemble.minimum:.6g}"),
    ]


def sampler_correctness(ctx: CriterionContext) -> List[VerdictRecord]:
    """N = 1 kernel invariance by quadrature and the pinning atom frequency against its closed form"""
    strip_error = strip_kernel_invariance_error(IBPF_POTENTIAL)
    beta = 1.0
    pinning_error = pinning_kernel_invariance_error(beta)
    chains = ctx.count(64, floor=8)
    estimate = zero_fraction(PinningParams(beta=beta, n=1), chains, 1000, ctx.seed("criterion-8"))
    exact = float(special.expit(beta - np.log(np.sqrt(2.0 * np.pi) / 2.0)))
    return [
        ctx.verdict("8-strip-kernel-invariance", {"a": IBPF_POTENTIAL.a, "beta": IBPF_POTENTIAL.beta}, strip_error,
                    INVARIANCE_TOLERANCE, strip_error < INVARIANCE_TOLERANCE),
        ctx.verdict("8-pinning-kernel-invariance", {"beta": beta}, pinning_error, INVARIANCE_TOLERANCE,
                    pinning_error < INVARIANCE_TOLERANCE),
        ctx.verdict("8-pinning-atom-frequency", {"beta": beta, "chains": chains}, abs(estimate.mean - exact),
                    K_SE * estimate.se, estimate.within(exact), f"{estimate.mean:.5f} vs exact {exact:.5f}"),
    ]


def _run_into(config: RunConfig, out_dir: str, threads: int) -> Dict[str, bytes]:
    from wetsim.cli.main import execute

    previous = ReplicaExecutor.get_instance()
    ReplicaExecutor.configure(threads, config.chunks)
    try:
        execute(config.copy(update={"out_dir": out_dir, "threads": threads}))
    finally:
        ReplicaExecutor.configure(previous.threads, previous.chunks)
    return {path.name: path.read_bytes() for path in sorted(pathlib.Path(out_dir).iterdir())}


def determinism(ctx: CriterionContext) -> List[VerdictRecord]:
    """A cheap pipeline rerun at another thread count gives byte-identical artifacts"""
    keys = ContinuumKeys(law="truncated", eta=0.1, steps=1000, replicas=ctx.count(4000), obs_times=[0.5])
    config = RunConfig(command="simulate-continuum", seed=ctx.config.seed, chunks=ctx.config.chunks,
                       parameters=keys.dict())
    with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
        single = _run_into(config, first, threads=1)
        multi = _run_into(config, second, threads=4)
    differing = sorted(set(single) ^ set(multi)) + [name for name in single if multi.get(name, single[name])
                                                    != single[name]]
    return [ctx.verdict("9-determinism-threads", {"command": config.command.value, "parameters": keys.dict()},
                        len(differing), 0, not differing,
                        f"{len(single)} artifacts compared" + (f", differing: {differing}" if differing else ""))]


CRITERIA: Dict[int, Callable[[CriterionContext], List[VerdictRecord]]] = {
    1: continuum_convergence,
    2: stochastic_ordering,
    3: exponential_martingale,
    4: imhof_relation,
    5: integration_by_parts,
    6: tightness,
    7: spde_invariance,
    8: sampler_correctness,
    9: determinism,
}


def run_verify(config: RunConfig, keys: VerifyKeys, writer: ArtifactWriter) -> Dict[str, Any]:
    """
    Runs the selected criteria, writes the verdict report (JSON) and its CSV summary.

    :param config: run config
    :param keys: verify keys
    :param writer: artifact writer
    :return: summary with the overall verdict under 'passed'
    """
    ctx = CriterionContext(config, keys.scale)
    records: List[VerdictRecord] = []
    for criterion in sorted(set(keys.criteria)):
        logger.info(f"acceptance criterion {criterion}: {CRITERIA[criterion].__doc__}")
        try:
            records.extend(CRITERIA[criterion](ctx))
        except ConfigurationException:
            raise
        except WettingException as error:
            records.append(ctx.verdict(f"{criterion}-error", {"criterion": criterion}, 1.0, 0.0, False,
                                       error.detail))
    dumped = [record.dict(by_alias=True) for record in records]
    writer.write_json("verdicts", dumped)
    writer.write_csv("verdicts", ["test_id", "statistic", "threshold", "pass", "seed", "inputs_digest"], (
        (r.test_id, r.statistic, r.threshold, r.passed, r.seed, r.inputs_digest) for r in records
    ))
    failed = [record.test_id for record in records if not record.passed]
    return {"passed": not failed, "failed": failed, "criteria": sorted(set(keys.criteria)), "records": len(records)}
