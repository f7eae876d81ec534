"""Accelerated discrete-time average consensus: delayed feedback and momentum methods."""

from .consensus import Algorithm, AlgorithmConfig, RunTrace, run
from .delay_analysis import (
    acceleration_delay_bound,
    admissible_delay,
    analyze,
    convergence_factor,
    stability_check,
)
from .graph import Graph, build_graph, five_agent_graph, is_connected, laplacian
from .spectral import Spectrum, eigendecompose, poly_roots_delay

__all__ = [
    "Algorithm",
    "AlgorithmConfig",
    "Graph",
    "RunTrace",
    "Spectrum",
    "acceleration_delay_bound",
    "admissible_delay",
    "analyze",
    "build_graph",
    "convergence_factor",
    "eigendecompose",
    "five_agent_graph",
    "is_connected",
    "laplacian",
    "poly_roots_delay",
    "run",
    "stability_check",
]

__version__ = "0.1.0"
