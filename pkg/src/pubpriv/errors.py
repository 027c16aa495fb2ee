"""Exception hierarchy shared by all modules."""


class PubPrivError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(PubPrivError, ValueError):
    """Invalid model, mechanism or experiment parameters."""


class ShapeError(PubPrivError, ValueError):
    """Array dimensions disagree with each other or with the parameters."""


class EmptyInputError(PubPrivError, ValueError):
    """An operation that needs at least one row received none."""


class DegeneratePathError(ParameterError):
    """A two-source formula was asked for while one source is empty."""


class BudgetError(ParameterError):
    """A privacy budget is unusable for the requested mechanism."""


class SingularDesignError(PubPrivError, ArithmeticError):
    """The normal matrix of a least-squares problem is (numerically) singular."""


class NumericalError(PubPrivError, ArithmeticError):
    """A factorization that should succeed for valid inputs failed."""


class ExperimentError(PubPrivError):
    """Too many trials of an experiment failed."""

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = records
