"""Exception types shared across the package."""


class CondlabError(Exception):
    """Base class for all condlab errors."""


class ValidationError(CondlabError):
    """Input violates a documented precondition (range, finiteness, labels)."""


class DimensionError(ValidationError):
    """Shapes do not match or an operand is empty."""


class FormatError(CondlabError):
    """A binary file (IDX, checkpoint) is malformed or truncated."""


class ConditioningError(CondlabError):
    """An operation required a nonsingular matrix and got a singular one."""


class DegenerateInputError(CondlabError):
    """The requested quantity is undefined for this input (e.g. zero column)."""


class TrainingError(CondlabError):
    """Training diverged; carries the epoch index in the message."""
