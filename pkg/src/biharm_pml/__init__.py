"""Quasi-periodic biharmonic wave scattering by a strip, with exact and PML transparent boundaries."""

from .dtn import exact_symbol, forcing_terms, positivity_threshold
from .errors import (
    BiharmError,
    ConfigError,
    DegenerateDenominatorError,
    DomainError,
    MissingSymbolError,
    NotFoundError,
    ResonanceError,
    SingularSystemError,
)
from .modal import Boundary, ProblemConfig, TraceCoefficients, mode_params
from .pml import PmlProfile, pml_symbol, symbol_error, theta_bound
from .solver import Scenario, field_eval, solution_error, solve, solve_mode

__version__ = "0.1.0"
