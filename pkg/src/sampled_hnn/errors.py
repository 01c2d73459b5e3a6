"""Exception hierarchy shared by all modules."""


class SampledHNNError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SampledHNNError, ValueError):
    pass


class CatalogError(SampledHNNError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DegeneratePairError(SampledHNNError, ValueError):
    pass


class DegenerateDataError(SampledHNNError, ValueError):
    pass


class SamplingExhaustedError(SampledHNNError, RuntimeError):
    pass


class NumericError(SampledHNNError, ArithmeticError):
    pass


class StepFailure(NumericError):
    """Integrator failure, carrying the index of the step that failed."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(SampledHNNError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SchemaError(SampledHNNError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
