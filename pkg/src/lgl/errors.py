"""Exception types raised by the solvers."""


class GameFormatError(ValueError):
    """A game document could not be parsed into a GameInstance."""


class UnavailableAction(ValueError):
    """An action outside A(c) was passed for characteristic c."""


class AssumptionViolation(ValueError):
    """Lattice / supermodularity assumptions required by a solver fail."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EmptySurvivors(RuntimeError):
    """An elimination round removed every action of some pair.

    With exact arithmetic this cannot happen; it signals a tolerance failure.
    """


class BrokenLatticeArgmax(RuntimeError):
    """The join (meet) of an argmax set is not itself a maximiser."""


class IllConditionedProblem(ArithmeticError):
    """The simplex kernel lost too much precision to certify its answer."""


class UnsupportedMode(NotImplementedError):
    """Operation not available for black-box payoff oracles."""
