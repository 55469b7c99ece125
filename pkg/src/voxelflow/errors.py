class VoxelflowError(Exception):
    """Base class for all errors raised by voxelflow."""


class ConfigError(VoxelflowError):
    """Configuration problem (parse, schema or validation). Carries the
    config path of the offending entry when known."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
