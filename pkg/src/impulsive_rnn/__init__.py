"""Impulsive recurrent neural networks with piecewise constant argument.

Simulation, hypothesis checks, equilibria, periodic solutions and numerical
stability verification.
"""

from .equilibrium import EquilibriumResult, check_condition_A, solve_equilibrium
from .errors import (ConfigurationError, DivergenceError, DomainError, ImpulsiveNetError,
                     LambdaUndefinedError, NonConvergenceError, ValidationError)
from .hypotheses import DerivedConstants, HypothesisReport, check_hypotheses, derive_constants
from .integrator import PicardReport, StepControl, apply_impulse, count_impulses, picard_solve, simulate
from .model import (ActivationSpec, ImpulseFamily, ImpulseMap, NetworkSpec, TimeStructure,
                    Trajectory, beta, rhs, validate)
from .periodic import (GridLayout, PeriodicGrid, PeriodicResult, apply_F, find_periodic,
                       greens_function, poincare_check)
from .stability import StabilityReport, decay_exponent, verify_decay, verify_lambda_inequality

__version__ = "0.1.0"

__all__ = [
    "ActivationSpec", "ImpulseFamily", "ImpulseMap", "NetworkSpec", "TimeStructure", "Trajectory",
    "beta", "rhs", "validate",
    "DerivedConstants", "HypothesisReport", "check_hypotheses", "derive_constants",
    "EquilibriumResult", "solve_equilibrium", "check_condition_A",
    "StepControl", "PicardReport", "simulate", "picard_solve", "apply_impulse", "count_impulses",
    "GridLayout", "PeriodicGrid", "PeriodicResult", "apply_F", "find_periodic", "greens_function",
    "poincare_check",
    "StabilityReport", "decay_exponent", "verify_decay", "verify_lambda_inequality",
    "ImpulsiveNetError", "DomainError", "ValidationError", "ConfigurationError",
    "LambdaUndefinedError", "NonConvergenceError", "DivergenceError",
]
