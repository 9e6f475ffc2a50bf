"""Numerical noncommutative residues on graded model spaces."""
from .errors import (
    ConvergenceError,
    DomainError,
    HomogeneityEvaluationError,
    MissingTermError,
    NCResidueError,
    SpecError,
    SupportOverflowError,
)
from .graded import Grading, QuasiNorm, dilate, quasi_norm, sphere_quadrature, surface_area

__version__ = "0.1.0"
