"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: :class:`DataError` subclasses exit
with 2 and :class:`NumericalError` subclasses with 3.
"""


class QfeError(Exception):
    """Base class for all package errors."""


class DataError(QfeError, ValueError):
    """Invalid input data or arguments."""


class DomainError(DataError):
    """A parameter lies outside its admissible domain."""


class RangeError(DataError):
    """A coordinate lies outside the range where a function is defined."""


class NormalizationError(DataError):
    """Outcome probabilities over the probe settings do not sum to one."""

    def __init__(self, deficit: float):
        self.deficit = deficit
        super().__init__(
            f"probabilities over settings do not sum to 1 (normalization deficit {deficit:+.3e})"
        )


class GridMismatchError(DataError):
    """Two sampled functions are not defined on the same grid."""


class DataImpossibleError(DataError):
    """Observed counts have zero likelihood everywhere on the prior support."""


class ConfigError(DataError):
    """Invalid configuration text."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class NumericalError(QfeError, ArithmeticError):
    """A numerical routine failed or a quantity is not identifiable."""


class UnidentifiableError(NumericalError):
    """The phase carries no Fisher information (e.g. zero visibility)."""

    def __init__(self, message: str = "phase unidentifiable: effective Fisher information is zero"):
        super().__init__(message)


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class BoundaryMassWarning(UserWarning):
    """A posterior puts non-negligible mass on the edge of its grid."""
