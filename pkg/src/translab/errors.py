"""Exception hierarchy shared by the solver and the analysis harness."""


class TranslabError(Exception):
    """Base class for all package errors."""


class DomainError(TranslabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(TranslabError, ValueError):
    """Invalid parameter value or combination."""


class GeometryError(TranslabError, ValueError):
    """A ball or cylinder is not contained in the admissible region."""


class ResolutionError(TranslabError, ValueError):
    """The grid is too coarse for the requested radius."""


class ConditionError(TranslabError):
    """Coefficient conditions (ellipticity, boundedness, Dini) are violated.

    ``report`` carries the full :class:`~translab.problem.ConditionsReport`.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericalError(TranslabError, ArithmeticError):
    """A numerical procedure failed; ``partial`` holds the best value reached."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class QuadratureError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    """Iterative solve did not reach tolerance.

    ``residual`` is the final relative residual, ``step`` the time step index
    when raised from a time-stepping loop.
    """

    def __init__(self, message, partial=None, residual=None, step=None):
        super().__init__(message, partial)
        self.residual = residual
        self.step = step
