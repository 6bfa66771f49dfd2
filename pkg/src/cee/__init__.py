"""Degree-constrained Nevanlinna-Pick interpolation via the covariance extension equation."""

from .errors import CeeError, InfeasibleError, InputError, NumericalError, PathFailure, UnequalIndicesError
from .interp import InterpolationProblem, covariance_problem, normalize, pick_test, validate
from .poly import MatrixPolynomial, Polynomial
from .scalar import CeeSolution, SpectralPrior, solve_cee, solve_covariance

__version__ = "0.1.0"
