"""Exception types shared across the package."""


class RoofkitError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RoofkitError):
    """Operands have incompatible or non-square dimensions."""


class ParameterError(RoofkitError):
    """A numeric parameter or option is outside its admissible range."""


class ValidityError(RoofkitError):
    """An operator violates a structural invariant (hermiticity, positivity, trace)."""


class NumericError(RoofkitError):
    """A numerical routine failed to converge."""


class DegenerateTruncationError(RoofkitError):
    """A truncation projector carries (almost) none of the state's weight."""


class InfeasibleError(RoofkitError):
    """A constraint set is empty at the requested level."""


class ResolutionError(RoofkitError):
    """A discretization grid is too coarse for the requested construction."""


class UnsupportedError(RoofkitError):
    """The requested quantity is not available for this input family."""
