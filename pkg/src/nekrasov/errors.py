"""Exception hierarchy.

Numerical failures and configuration errors are kept apart so that the
command line can map them onto distinct exit codes.
"""


class WaveError(Exception):
    """Base class for every error raised by this package."""


class NumericalFailure(WaveError):
    """A computation left its domain of validity or failed to converge."""


class ConfigError(WaveError):
    """Invalid run configuration."""


class GridTooSmall(WaveError):
    pass


class ModeCountTooLarge(WaveError):
    pass


class DomainViolation(NumericalFailure):
    def __init__(self, message, index):
        super().__init__(f"{message} (grid index {index})")
        self.index = index


class SingularPoint(NumericalFailure):
    pass


class DenominatorVanished(NumericalFailure):
    def __init__(self, min_value, index):
        super().__init__(
            f"denominator 1 + mu*int(sin Phi) fell to {min_value:.3e} at grid index {index}"
        )
        self.min_value = min_value
        self.index = index


class OverflowGuard(NumericalFailure):
    pass


class NonConvergence(NumericalFailure):
    pass


class IncompatibleSingularSystem(NumericalFailure):
    def __init__(self, projection):
        super().__init__(
            f"right-hand side has eigen-component {projection:.3e} at a characteristic value"
        )
        self.projection = projection


class NewtonDiverged(NumericalFailure):
    def __init__(self, iterations, residual):
        super().__init__(f"Newton failed after {iterations} iterations, residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class ComplementNewtonDiverged(NewtonDiverged):
    pass


class SolvabilityFailure(NumericalFailure):
    def __init__(self, order, polynomial):
        super().__init__(
            f"no real nontrivial constant solves the order-{order} solvability condition "
            f"(polynomial coefficients {list(polynomial)})"
        )
        self.order = order
        self.polynomial = polynomial


class OrderTooHigh(WaveError):
    pass


class FitIllConditioned(NumericalFailure):
    def __init__(self, condition):
        super().__init__(f"design matrix condition number {condition:.3e} exceeds 1e12")
        self.condition = condition
