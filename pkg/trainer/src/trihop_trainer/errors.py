class TrainerError(Exception):
    """Base class for everything this package raises on purpose."""


class SchemaMismatchError(TrainerError):
    """Training file does not match the expected export format."""


class ConfigError(TrainerError):
    """A TrainerConfig field or training precondition is violated."""


class ResourceError(TrainerError):
    """Training ran out of a machine resource; message carries the config."""


class BadCheckpointError(TrainerError):
    """Checkpoint directory is missing, unreadable, or malformed."""
