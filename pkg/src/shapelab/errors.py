"""Exception hierarchy shared by all shapelab modules."""


class ShapelabError(Exception):
    """Base class for every error raised by shapelab."""


class ValidationError(ShapelabError, ValueError):
    """Input violates a documented invariant (degenerate polygon, bad file, ...)."""


class ContractError(ShapelabError, ValueError):
    """A precondition on a query failed, e.g. a threshold above completeness."""


class NumericError(ShapelabError, ArithmeticError):
    """An iterative numeric routine did not reach its tolerance."""


class AccuracyError(NumericError):
    """A discretization could not meet the requested accuracy within its limits."""


class ResourceError(ShapelabError, RuntimeError):
    """An enumeration or allocation would exceed a configured cap."""


class OptimizationError(ShapelabError, RuntimeError):
    """The optimizer exhausted its budget without a feasible evaluation."""
