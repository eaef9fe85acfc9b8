"""Spectral Vlasov-Poisson solver with checks of its Sobolev well-posedness estimates."""
from ._backend import BACKEND
from .config import ConfigError, RunConfig, parse_config
from .grid import (DiagnosticsSeries, DistributionField, PhaseGrid, SimParams, SpectralField,
                   build_grid, support_radius)
from .initial_data import InitialDataSpec, generate_initial_data
from .io import read_snapshot, write_snapshot
from .poisson import ForceField, solve
from .solver import NumericalAbort, Trajectory, run, strang_step

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "RunConfig", "parse_config", "DiagnosticsSeries",
    "DistributionField", "PhaseGrid", "SimParams", "SpectralField", "build_grid",
    "support_radius", "InitialDataSpec", "generate_initial_data", "read_snapshot",
    "write_snapshot", "ForceField", "solve", "NumericalAbort", "Trajectory", "run",
    "strang_step",
]
