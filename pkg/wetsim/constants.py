"""Toolkit constants"""

# spectral cutoff K for sine coefficients and H^{-gamma} norms
DEFAULT_SPECTRAL_CUTOFF = 128
# significant digits for decimal serialization (bit-exact float64 round trip)
SERIALIZATION_DIGITS = 17
# decision rule for every stochastic verdict: |estimate - target| <= K_SE * se
K_SE = 3.0
# quantile grid size for CDF comparisons
QUANTILE_GRID_SIZE = 200
# minimal effective sample size for weighted estimates and conditional slices
MIN_EFFECTIVE_SAMPLE_SIZE = 100
# fewer trajectories than this flags increment-moment standard errors as unreliable
MIN_TRAJECTORIES_FOR_SE = 1000
# asymptotic 95% KS quantile, multiplied by the pure-noise safety factor below
KS_ASYMPTOTIC_QUANTILE = 1.36
KS_NOISE_FACTOR = 1.5
# KS thresholds for scheme-biased comparisons
KS_THRESHOLD_SCHEME = 0.02
KS_THRESHOLD_SPDE = 0.05
# Gibbs chains: burn-in = GIBBS_BURN_IN_FACTOR * N sweeps, keep every GIBBS_THIN_FACTOR * N sweeps
GIBBS_BURN_IN_FACTOR = 10
GIBBS_THIN_FACTOR = 1
# projected Euler for the lattice system: drift step above this multiple of the noise scale warns
STABILITY_RATIO = 10.0
# Euler step of the lattice SDE system in microscopic time; the default dt_micro is this over N^2
DEFAULT_MICRO_STEP = 1e-3
# unnormalized mass of exp(-1 / (1 - u^2)) over [-1, 1]
MOLLIFIER_RAW_MASS = 0.44399381616807943
# resolution of tabulated mollifier primitives (points per unit of the rescaled variable)
MOLLIFIER_TABLE_POINTS = 4001
# batch count for batch-means standard errors of correlated chains
BATCH_MEANS_BATCHES = 50
# number of replica chunks when neither settings nor the run config set one
DEFAULT_CHUNK_COUNT = 8
