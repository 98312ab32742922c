"""Samplers of the static wetting laws and reference path laws, and the integration-by-parts verifier"""
from wetsim.static_models.gibbs import gibbs_sweep_delta_pinning, gibbs_sweep_strip
from wetsim.static_models.ibpf import ibpf_residual, ibpf_residual_mc
from wetsim.static_models.models import (
    PinningParams,
    PotentialShape,
    ReferenceKind,
    ReferencePathLaw,
    StripPotential,
)
from wetsim.static_models.reference_paths import sample_reference_ensemble, sample_reference_path
