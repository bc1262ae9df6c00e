"""Exception hierarchy shared by every module."""


class ConvexValError(Exception):
    """Base class for all errors raised by convexval."""


class DimensionError(ConvexValError, ValueError):
    pass


class ModeMismatchError(ConvexValError, ValueError):
    pass


class EmptyInputError(ConvexValError, ValueError):
    pass


class EmptyIntersectionError(ConvexValError):
    """The requested intersection has no points."""


class UnboundedError(ConvexValError):
    pass


class DegenerateError(ConvexValError):
    """Input violates a genericity or full-dimensionality requirement."""


class InvariantError(ConvexValError, AssertionError):
    """An internal consistency check failed; indicates a bug."""


class NotStrictlyConvexError(ConvexValError):
    pass


class ToleranceError(ConvexValError):
    """A numeric route could not reach the requested accuracy."""


class ConvexityError(ConvexValError):
    """A set required to be convex failed validation."""


class OrientationError(ConvexValError):
    pass


class GluingError(ConvexValError):
    pass


class SceneError(ConvexValError):
    pass


class ProvenanceError(ConvexValError):
    """An object was not produced by the operation a routine requires."""
