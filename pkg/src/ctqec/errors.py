"""Exception hierarchy shared across the package."""


class CTQECError(Exception):
    """Base class for all package errors."""


class DimensionError(CTQECError, ValueError):
    """Operands have incompatible or invalid shapes."""


class CodeDefinitionError(CTQECError, ValueError):
    """A stabilizer code definition is malformed or inconsistent.

    ``line`` is the 1-based line number in the source text when the error
    comes from parsing a code file.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateWeightsError(CTQECError, ArithmeticError):
    """Optimal correction is undefined because 3*w0 <= w1."""


class ConvergenceError(CTQECError):
    """An iterative search stopped before meeting its tolerance.

    ``lower_bound`` carries the best value found.
    """

    def __init__(self, message, lower_bound=None):
        self.lower_bound = lower_bound
        super().__init__(message)


class IntegrationError(CTQECError):
    """Time integration lost trace or positivity beyond the abort threshold.

    ``trace`` holds the partial :class:`~ctqec.dynamics.SimulationTrace`.
    """

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


class QubitCapError(CTQECError, ValueError):
    """A full-space simulation would exceed the configured qubit cap."""
