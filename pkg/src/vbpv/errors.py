"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input (bad range, malformed file, inconsistent values)."""


class UnsupportedLatitudeError(InputError):
    pass


class SunBelowHorizonError(InputError):
    pass


class WeatherParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(InputError):
    pass


class CoverageError(InputError):
    def __init__(self, message, gaps=()):
        self.gaps = list(gaps)
        super().__init__(message)


class ComparisonError(InputError):
    pass


class ComputationError(RuntimeError):
    """A numerical procedure failed to produce a result."""


class ExtractionError(ComputationError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class SweepTooLargeError(InputError):
    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        super().__init__(f"grid has {size} points, exceeds cap {cap}; rerun with cap >= {size}")
