"""Spectral experiments around Gaussian decay, log-convexity of weighted
norms, Carleman inequalities and the Appell transform for
du/dt = (A + iB)(u_xx + V u) on the line."""
from .analytic import GaussianState, evolve_gaussian, hardy_extremal_pair, sample_evolution
from .errors import HardyLabError, ParameterOutOfRange
from .grid import ComplexField, Grid, SpaceTimeField, l2_norm
from .propagator import FlowSpec, evolve, free_flow

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "FlowSpec",
    "GaussianState",
    "Grid",
    "HardyLabError",
    "ParameterOutOfRange",
    "SpaceTimeField",
    "evolve",
    "evolve_gaussian",
    "free_flow",
    "hardy_extremal_pair",
    "l2_norm",
    "sample_evolution",
]
