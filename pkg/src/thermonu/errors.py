"""Exception types raised across the package."""


class ThermoNUError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""


class GeometryError(ThermoNUError):
    pass


class SingularFitError(ThermoNUError):
    """Least-squares design is rank deficient or under-determined."""


class FrameFormatError(ThermoNUError):
    pass


class ModelFormatError(ThermoNUError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class IngestError(ThermoNUError):
    pass


class TemperatureRangeError(ThermoNUError):
    pass


class MonotonicityError(ThermoNUError):
    def __init__(self, pixel, message):
        super().__init__(f"pixel {pixel}: {message}")
        self.pixel = pixel


class StageError(ThermoNUError):
    """Wraps a failure inside a multi-stage pipeline with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
