"""Simulation, fractional calculus and utility maximisation for
Wiener-transformable Gaussian markets."""

from .errors import NumericalFlag, ValidationError, WienerlabError
from .gauss_sim import GaussianModel, check_conditions, covariance, simulate_exact, simulate_fbm_volterra, simulate_fou
from .paths import GridFunction, SamplePath

__version__ = "0.1.0"

__all__ = [
    "GaussianModel",
    "GridFunction",
    "SamplePath",
    "NumericalFlag",
    "ValidationError",
    "WienerlabError",
    "check_conditions",
    "covariance",
    "simulate_exact",
    "simulate_fbm_volterra",
    "simulate_fou",
]
