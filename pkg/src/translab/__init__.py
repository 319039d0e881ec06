"""Finite element solver and regularity harness for elliptic and parabolic transmission problems."""

from .elliptic import RunLog, refine_study, solve_transmission
from .errors import (ConditionError, ConvergenceError, DomainError, GeometryError, NumericalError,
                     ParameterError, QuadratureError, ResolutionError, TranslabError)
from .fem import DiscreteField, Grid, assemble, solve_cg
from .modulus import Modulus, dini_integral, lemma_a2_check, psi
from .parabolic import TimeField, solve_parabolic
from .problem import (Ball, CoefficientTensor, Complement, Cusp, Empty, HalfSpace, Moving, TimeSlab,
                      TransmissionProblem, Union, rescaled_density, verify_conditions)

__version__ = "0.1.0"

__all__ = [
    "Ball", "CoefficientTensor", "Complement", "ConditionError", "ConvergenceError", "Cusp", "DiscreteField",
    "DomainError", "Empty", "GeometryError", "Grid", "HalfSpace", "Modulus", "Moving", "NumericalError",
    "ParameterError", "QuadratureError", "ResolutionError", "RunLog", "TimeField", "TimeSlab", "TranslabError",
    "TransmissionProblem", "Union", "assemble", "dini_integral", "lemma_a2_check", "psi", "refine_study",
    "rescaled_density", "solve_cg", "solve_parabolic", "solve_transmission", "verify_conditions",
]
