"""Exception types raised by empbern."""


class InfeasibleScheduleError(ValueError):
    """No full pair of blocks fits into the trajectory."""


class DimensionError(ValueError):
    """Array shapes do not match what the operation needs."""


class KindError(TypeError):
    """A Gram matrix of the wrong kind was passed."""


class UndefinedStatisticError(ValueError):
    """A u-statistic needs at least two blocks per sequence."""


class DomainError(ValueError):
    """A parameter lies outside the domain where a bound holds."""


class UnsupportedKernelError(ValueError):
    """The requested quantity has no closed form for this kernel."""


class AllInfeasibleError(RuntimeError):
    """Every configuration of a grid produced an infeasible bound."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table
