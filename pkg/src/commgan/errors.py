"""Exception hierarchy shared by all modules."""


class CommGanError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CommGanError, ValueError):
    """Invalid configuration value, range or layout."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        self.detail = message
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class DomainError(CommGanError, ValueError):
    """Argument outside the domain of an operation."""


class ContractError(CommGanError, ValueError):
    """Shapes or objects that do not belong together."""


class NumericError(CommGanError, ArithmeticError):
    """Non-finite values produced or consumed."""

    def __init__(self, message, layer=None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


class CheckpointError(CommGanError, ValueError):
    """Checkpoint file that cannot be read back."""
