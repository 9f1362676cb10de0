"""Exception hierarchy shared by all modnet modules."""


class ModnetError(Exception):
    """Base class for every error raised deliberately by modnet."""


class DimensionError(ModnetError, ValueError):
    """Shapes or ranks are incompatible with the requested operation."""


class DomainError(ModnetError, ValueError):
    """An input lies outside the domain where the operation is defined."""


class NumericalError(ModnetError, ArithmeticError):
    """An iterative or factorization routine failed numerically."""


class TheoremInapplicableError(DomainError):
    """The asymptotic result requested does not apply to these parameters."""


class ConfigError(ModnetError, ValueError):
    """A run configuration failed validation."""


class ParseError(ModnetError, ValueError):
    """An input file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
