"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand dimensions violate an operation's contract."""


class ConfigError(ValueError):
    """Invalid configuration value, argument, or file format."""


class DataError(ValueError):
    """Dataset contents violate a contract (labels, parsing, splits)."""


class SchemaError(DataError):
    """A tabular input does not match the expected schema."""


class TrainingAbort(RuntimeError):
    """Training stopped on a non-finite loss. Carries diagnostics."""

    def __init__(self, message, *, epoch=None, batch=None, learning_rate=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.learning_rate = learning_rate
