"""Exception hierarchy. CLI exit codes key off these classes."""


class PfaBootError(Exception):
    pass


class InvalidArgumentError(PfaBootError, ValueError):
    pass


class NotOnGridError(InvalidArgumentError):
    def __init__(self, index, time, delta_t):
        self.index = index
        self.time = time
        super().__init__(
            f"sample {index} at t={time!r} is not on the grid of step {delta_t!r}"
        )


class NumericalError(PfaBootError, ArithmeticError):
    pass


class DegenerateDenominatorError(NumericalError):
    pass


class DegenerateVarianceError(NumericalError):
    pass


class FitFailureError(NumericalError):
    pass


class InsufficientLagCoverageError(FitFailureError):
    def __init__(self, lag):
        self.lag = lag
        super().__init__(f"no sample pairs at lag {lag}; cannot estimate autocovariance")


class GEVFitError(FitFailureError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
