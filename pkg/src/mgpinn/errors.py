class ConfigurationError(ValueError):
    """Invalid network, stack, sampler or run configuration."""


class TrainingFault(RuntimeError):
    """A non-finite loss or gradient was produced during training."""

    def __init__(self, message, epoch=None, breakdown=None, point=None):
        super().__init__(message)
        self.epoch = epoch
        self.breakdown = breakdown
        self.point = point


class NumericalFault(RuntimeError):
    """A numerical procedure (quadrature) failed to reach its tolerance."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given inputs."""
