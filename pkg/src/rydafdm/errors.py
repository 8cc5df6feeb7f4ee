"""Exception hierarchy shared by the simulator, estimator and CLI."""


class RydAfdmError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RydAfdmError, ValueError):
    pass


class DomainError(RydAfdmError, ValueError):
    pass


class ConfigurationError(RydAfdmError, ValueError):
    pass


class SolverError(RydAfdmError, RuntimeError):
    pass


class DegenerateNoiseError(RydAfdmError, ValueError):
    pass


class NumericalError(RydAfdmError, FloatingPointError):
    pass


class FrameFailureError(RydAfdmError, RuntimeError):
    """Every subcarrier of a frame was rejected as low-confidence."""


class SingularSystemError(RydAfdmError, ArithmeticError):
    """The post-chirp matrix is rank deficient (identical chirp rates)."""


class ConfigLoadError(RydAfdmError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
