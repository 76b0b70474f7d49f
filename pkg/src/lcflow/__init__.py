"""Pseudo-spectral solver and diagnostics for nematic liquid-crystal flow.

The constrained Ericksen-Leslie system and its Ginzburg-Landau penalization
are integrated on periodic boxes in two or three dimensions.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config, parse_config, serialize_config
from .convergence import SweepReport, epsilon_sweep, error_norms
from .diagnostics import (
    DEFAULT_PAIRS,
    DiagnosticSettings,
    SerrinPair,
    Trajectory,
    blowup_indicators,
    bmo_seminorm,
    energy_balance_residual,
    identity_checks,
    lebesgue_norm,
    log_sobolev_ratio,
    serrin_norm,
    tail_energy,
)
from .dynamics import SchemeConfig, run, solve_pressure, stable_dt, step
from . import errors
from .frank import FrankConstants, total_energy
from .grid import Grid
from .initial import InitialConditionSpec, initial_condition
from .io import read_snapshot, write_diagnostics, write_snapshot
from .state import State

__all__ = [
    "RunConfig",
    "load_config",
    "parse_config",
    "serialize_config",
    "SweepReport",
    "epsilon_sweep",
    "error_norms",
    "DEFAULT_PAIRS",
    "DiagnosticSettings",
    "SerrinPair",
    "Trajectory",
    "blowup_indicators",
    "bmo_seminorm",
    "energy_balance_residual",
    "identity_checks",
    "lebesgue_norm",
    "log_sobolev_ratio",
    "serrin_norm",
    "tail_energy",
    "SchemeConfig",
    "run",
    "solve_pressure",
    "stable_dt",
    "step",
    "FrankConstants",
    "total_energy",
    "Grid",
    "InitialConditionSpec",
    "initial_condition",
    "read_snapshot",
    "write_diagnostics",
    "write_snapshot",
    "State",
    "errors",
]
