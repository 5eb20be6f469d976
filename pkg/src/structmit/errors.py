"""Exception hierarchy shared across the package."""


class StructMitError(Exception):
    """Base class for all package errors."""


class NumericError(StructMitError):
    """A numerical routine could not produce a trustworthy result."""


class NonHermitianError(NumericError):
    pass


class NegativeEigenvalueError(NumericError):
    pass


class RankDeficientError(NumericError):
    def __init__(self, index, value):
        super().__init__(f"R[{index},{index}] = {value:.3e} underflowed the rank tolerance")
        self.index = index
        self.value = value


class SingularCalibrationError(NumericError):
    pass


class PostSelectionError(NumericError):
    pass


class TrainingError(NumericError):
    pass


class CalibrationError(NumericError):
    pass


class ConfigError(StructMitError):
    pass
