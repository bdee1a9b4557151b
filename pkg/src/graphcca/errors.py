"""Exception types raised across the package.

Every error derives from :class:`GraphCCAError` so callers can catch the
whole family; most also derive from ``ValueError`` because they signal bad
input rather than internal failure.
"""


class GraphCCAError(Exception):
    pass


class NotSymmetric(GraphCCAError, ValueError):
    pass


class SingularMatrix(GraphCCAError, ValueError):
    pass


class SingularKernel(SingularMatrix):
    pass


class RankRequestTooLarge(GraphCCAError, ValueError):
    pass


class DimensionMismatch(GraphCCAError, ValueError):
    pass


class GraphSizeMismatch(DimensionMismatch):
    pass


class ZeroNormSample(GraphCCAError, ValueError):
    pass


class ClassTooSmall(GraphCCAError, ValueError):
    def __init__(self, label, size, needed):
        self.label = label
        self.size = size
        self.needed = needed
        super().__init__(f"class {label!r} has {size} members, needs at least {needed}")


class UnsupportedFilter(GraphCCAError, ValueError):
    pass


class EpsilonNonPositive(GraphCCAError, ValueError):
    pass


class BandwidthNonPositive(GraphCCAError, ValueError):
    pass


class DegenerateData(GraphCCAError, ValueError):
    pass


class EmptyDictionary(GraphCCAError, ValueError):
    pass


class BadSplitPoint(GraphCCAError, ValueError):
    pass


class KTooLarge(GraphCCAError, ValueError):
    pass


class ParseError(GraphCCAError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class RaggedRows(ParseError):
    pass


class BadMagic(GraphCCAError, ValueError):
    pass


class TruncatedFile(GraphCCAError, ValueError):
    pass


class CountMismatch(GraphCCAError, ValueError):
    pass


class ConfigError(GraphCCAError, ValueError):
    pass


class GridCellError(GraphCCAError):
    """A solver failure annotated with the hyperparameter cell that raised it."""

    def __init__(self, variant, gamma, epsilon, cause):
        self.variant = variant
        self.gamma = gamma
        self.epsilon = epsilon
        self.cause = cause
        super().__init__(
            f"{variant} failed at gamma={gamma!r}, epsilon={epsilon!r}: "
            f"{type(cause).__name__}: {cause}"
        )
