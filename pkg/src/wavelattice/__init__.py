"""Three-wave kinetic dynamics on a Xi-adic circular lattice."""

from .config import ConfigError, ModelConfig, parse_config, preset, preset_names
from .lattice import LatticeRadius, ZERO, add, canonical, enumerate_interactions, radius, sub
from .state import FullState, ShellState, build_initial, snorm
from .collision import cq_check, grid_rates, rhs, weak_eval
from .integrator import StepControl, picard_solve, run, step_patankar, step_rk4
from .diagnostics import DiagnosticsRecord, verify

__all__ = [
    "ConfigError", "ModelConfig", "parse_config", "preset", "preset_names",
    "LatticeRadius", "ZERO", "add", "canonical", "enumerate_interactions", "radius", "sub",
    "FullState", "ShellState", "build_initial", "snorm",
    "cq_check", "grid_rates", "rhs", "weak_eval",
    "StepControl", "picard_solve", "run", "step_patankar", "step_rk4",
    "DiagnosticsRecord", "verify",
]
