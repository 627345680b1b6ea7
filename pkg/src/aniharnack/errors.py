"""Exception types shared across the toolkit."""


class UsageError(ValueError):
    """Caller supplied arguments that violate an operation's contract."""


class DomainError(ValueError):
    """A point or grid lies outside the set where an operation is defined."""


class NumericalError(ArithmeticError):
    """A numerical kernel (eigenvalues, bisection) failed to produce a result."""


class InfeasibleError(ValueError):
    """The barrier parameter system has no solution for the given exponents.

    ``window`` carries whatever was computed before the failure, e.g. the
    gamma window bounds.
    """

    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class NonConvergenceError(RuntimeError):
    """Iterative solver hit ``max_iter`` before reaching its tolerance."""

    def __init__(self, message, residual_norm=float("nan")):
        super().__init__(message)
        self.residual_norm = residual_norm


class ExperimentError(RuntimeError):
    """An experiment's input violates the experiment's precondition."""


class HypothesisNotMet(ExperimentError):
    """The field does not satisfy the hypothesis of the estimate being tested.

    This is not evidence against the estimate; the run is simply inconclusive.
    """
