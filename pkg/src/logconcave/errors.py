"""Exception types shared across the package."""


class LogConcaveError(Exception):
    """Base class for all package errors."""


class DegenerateInput(LogConcaveError):
    """Point set or polytope does not have full affine dimension."""


class DegenerateSimplex(DegenerateInput):
    """Simplex with (numerically) zero volume."""


class WrongDimension(LogConcaveError):
    """Operation not available in the requested dimension."""


class InvalidSubdivision(LogConcaveError):
    """Cells do not form a polyhedral subdivision."""


class NotIntegrable(LogConcaveError):
    """exp of the affine form is not integrable over the set."""


class PreconditionViolated(LogConcaveError):
    """Inputs fall outside the domain where a bound is claimed."""


class NotConcave(LogConcaveError):
    """Piecewise affine function fails a concavity probe."""


class EmptyClass(LogConcaveError):
    """Requested density class has no members."""


class InvalidSample(LogConcaveError):
    """Sample contains points where the reference density vanishes."""


class NotConverged(LogConcaveError):
    """Iterative solver stopped before meeting its tolerance."""


class OutOfRange(LogConcaveError):
    """Parameter outside its admissible range."""


class MissingConstant(LogConcaveError):
    """A required constant is not available in this dimension."""


class NotNested(LogConcaveError):
    """Inner set is not contained in the outer set."""
