"""Reconstruction of weighted graphs from Neumann boundary spectral data."""

from .graph import WeightedBoundaryGraph, build_graph, extract_apriori, reduce
from .inverse import reconstruct, verify_roundtrip
from .lattices import generate_lattice
from .spectral import SpectralData, neumann_eigen, spectral_data
from .wave import step_wave

__all__ = [
    "SpectralData",
    "WeightedBoundaryGraph",
    "build_graph",
    "extract_apriori",
    "generate_lattice",
    "neumann_eigen",
    "reconstruct",
    "reduce",
    "spectral_data",
    "step_wave",
    "verify_roundtrip",
]
