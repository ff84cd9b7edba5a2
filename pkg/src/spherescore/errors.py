"""Exception hierarchy.

Every error raised by the package derives from :class:`SphereScoreError`;
the CLI maps the three families below onto distinct exit codes.
"""


class SphereScoreError(Exception):
    """Base class for all package errors."""


# -- input / parse family ---------------------------------------------------

class InvalidData(SphereScoreError, ValueError):
    """Non-finite or otherwise malformed data values."""


class ParseError(InvalidData):
    """A data file could not be parsed.

    ``row`` and ``column`` locate the problem (1-based, header is row 1)
    when known.
    """

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ShapeError(SphereScoreError, ValueError):
    pass


class DomainError(SphereScoreError, ValueError):
    pass


class ConfigError(SphereScoreError, ValueError):
    pass


class EmptyInput(SphereScoreError, ValueError):
    pass


# -- design family ----------------------------------------------------------

class DesignError(SphereScoreError, ValueError):
    """Inconsistent design or invalid projection pair."""


# -- numerical family -------------------------------------------------------

class NumericalError(SphereScoreError, ArithmeticError):
    pass


class EigenError(NumericalError):
    pass


class SingularError(NumericalError):
    pass


class DimensionError(NumericalError):
    pass


class DegenerateScore(NumericalError):
    """The score vector is (numerically) zero."""


class DegenerateTarget(NumericalError):
    pass


class InvalidScore(NumericalError):
    """Score vector is not compatible with the design subspace."""
