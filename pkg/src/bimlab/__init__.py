"""bimlab: 2D electromagnetic inverse-scattering reconstruction toolkit.

Forward modeling via a method-of-moments contrast-field formulation, and
reconstruction via the sparse (SBIM) and trained (TBIM) Born iterative
methods with an ISTA / TISTA inner loop.
"""

from .config import ConfigError, ProblemConfig, config_hash, load_config
from .emcore import (FieldSet, GreensOperators, add_noise, bicgstab,
                     build_greens, forward_solve, incident_fields,
                     scattered_fields, solve_state)
from .solvers import (ReconstructionResult, assemble_observation,
                      landweber_step, mrne, power_iteration, rne, sbim,
                      soft_threshold, tbim, tista)
from .special import hankel2

__all__ = [
    "ConfigError", "ProblemConfig", "config_hash", "load_config",
    "FieldSet", "GreensOperators", "add_noise", "bicgstab", "build_greens",
    "forward_solve", "incident_fields", "scattered_fields", "solve_state",
    "ReconstructionResult", "assemble_observation", "landweber_step", "mrne",
    "power_iteration", "rne", "sbim", "soft_threshold", "tbim", "tista",
    "hankel2",
]

__version__ = "0.1.0"
