"""Shared numeric substrate: containers, rescaling maps, spectral norms and seeded streams"""
from wetsim.core.interpolation import embed_caglad, interpolate_lattice
from wetsim.core.models import InterpolatedPath, LatticeField, PathKind, SeedSpec, SpectralVector, TimeGrid
from wetsim.core.random import RandomStream, random_stream
from wetsim.core.spectral import negative_sobolev_norm, sine_coefficients
