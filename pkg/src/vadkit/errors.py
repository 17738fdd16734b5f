"""Exception types shared across the package."""


class VadkitError(Exception):
    """Base class for all errors raised by vadkit."""


class ConfigError(VadkitError):
    """Invalid, inconsistent, or mismatched configuration."""


class DataError(VadkitError):
    """Dataset layout, annotation, or video content problem."""


class ShapeError(VadkitError):
    """Tensor shape does not match the active configuration."""


class TrainingDiverged(VadkitError):
    """Loss became non-finite during optimization.

    Carries the offending step and the last checkpoint written before the
    divergence (None if no checkpoint had been written yet).
    """

    def __init__(self, step: int, last_checkpoint):
        self.step = step
        self.last_checkpoint = last_checkpoint
        where = str(last_checkpoint) if last_checkpoint else "<none>"
        super().__init__(
            f"non-finite loss at step {step}; last good checkpoint: {where}"
        )
