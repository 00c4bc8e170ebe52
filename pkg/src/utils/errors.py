class NoiseClassError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(NoiseClassError):
    exit_code = 2


class DatasetError(ConfigError):
    """Malformed, ragged, duplicated or mislabeled dataset input."""


class KernelError(ConfigError):
    """Invalid kernel spec or a dimension mismatch against one."""


class QuadratureError(NoiseClassError):
    pass


class ThresholdUnboundedError(NoiseClassError):
    pass


class CensusCapError(NoiseClassError):
    exit_code = 2

    def __init__(self, required: int, cap: int):
        super().__init__(f"census needs {required} labelings but cap is {cap}; rerun with --cap {required}")
        self.required = required
        self.cap = cap


class InvariantViolation(NoiseClassError):
    exit_code = 3


class MonotonicityViolation(InvariantViolation):
    pass


class OutputError(NoiseClassError):
    """An artifact could not be written."""
