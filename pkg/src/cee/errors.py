"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CeeError(Exception):
    exit_code = 1


class InputError(CeeError, ValueError):
    """Malformed or inconsistent problem data."""

    exit_code = 4


class InfeasibleError(CeeError):
    """Data admit no strictly positive-real interpolant (Pick test fails)."""

    exit_code = 2


class NumericalError(CeeError, ArithmeticError):
    """Conditioning or convergence failure."""

    exit_code = 3


class PathFailure(NumericalError):
    """Homotopy continuation could not reach lambda = 1."""

    def __init__(self, message, lam_reached=0.0, trace=None):
        super().__init__(f"{message} (lambda reached {lam_reached:.6g})")
        self.lam_reached = lam_reached
        self.trace = trace


class UnequalIndicesError(InputError):
    """The VN block is singular: observability indices are not all equal."""
