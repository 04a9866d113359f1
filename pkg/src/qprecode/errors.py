"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters (codebook size, spacing, scheme names, ...)."""


class DomainError(ValueError):
    """Input outside the domain of an operation (non-finite value, zero precoder)."""


class NumericError(ArithmeticError):
    """A numerical routine failed to bracket, converge or factorize."""


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration exceeds its node or point budget.

    ``best`` carries the best solution found so far, or ``None`` for oracles
    that refuse up front.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SolverFailure(RuntimeError):
    """A precoder subproblem solver failed inside the WMMSE loop."""

    def __init__(self, iteration, cause):
        super().__init__(f"subproblem solver failed at iteration {iteration}: {cause}")
        self.iteration = iteration


class SweepError(RuntimeError):
    """A Monte Carlo sweep excluded too many drops to be trusted."""
