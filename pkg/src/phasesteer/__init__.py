"""Steering certification through phase estimation with finite resources.

Modules: ``qubit`` (states and measurements), ``information`` (Fisher
information), ``priors`` (prior densities and quadrature), ``bounds`` (Van
Trees and the steering limit), ``simulator``, ``estimation``, ``certify``
(the xi^2 test) and ``cli``.
"""

from .errors import (
    ConvergenceError,
    DegenerateError,
    DomainError,
    PhaseSteerError,
    SingularityError,
    SingularMatrixError,
)
from .priors import JointPrior, PhasePrior, VisibilityPrior
from .simulator import CountRecord, ExperimentConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "CountRecord",
    "DegenerateError",
    "DomainError",
    "ExperimentConfig",
    "JointPrior",
    "PhasePrior",
    "PhaseSteerError",
    "SingularMatrixError",
    "SingularityError",
    "VisibilityPrior",
    "simulate",
]
