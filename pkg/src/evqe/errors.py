"""Exception types raised across the package."""


class EvqeError(Exception):
    """Base class for package errors."""


class SizeError(EvqeError, ValueError):
    """A qubit count or matrix dimension is outside the supported range."""


class ShapeError(EvqeError, ValueError):
    """Operands have incompatible dimensions."""


class PauliParseError(EvqeError, ValueError):
    """A Pauli string or Pauli file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GraphError(EvqeError, ValueError):
    """A graph has invalid vertices or edges."""


class ValidationError(EvqeError, ValueError):
    """An input violates a documented invariant (e.g. a non-Hermitian matrix)."""


class RegistryError(EvqeError, KeyError):
    """A gene id could not be resolved."""


class OptimizerError(EvqeError, ArithmeticError):
    """An objective returned a non-finite value."""


class ConfigError(EvqeError, ValueError):
    """An experiment configuration is invalid."""

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
