"""Exception types shared across the package."""


class Dion2Error(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(Dion2Error, ValueError):
    """Operand shapes are incompatible."""


class NumericalError(Dion2Error, ArithmeticError):
    """A computation produced or received non-finite values, or failed to converge."""


class DegenerateInputError(NumericalError):
    """Input is (numerically) rank deficient where full rank is required."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


class ConfigError(Dion2Error, ValueError):
    """Invalid configuration value or document."""

    def __init__(self, message: str, key: str | None = None, path: str | None = None):
        parts = []
        if path is not None:
            parts.append(str(path))
        if key is not None:
            parts.append(f"key {key!r}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.key = key
        self.path = path
