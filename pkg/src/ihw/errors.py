"""Exception types shared across the package."""


class IhwError(Exception):
    """Base class for all package errors."""


class ValidationError(IhwError):
    """Invalid input data."""


class PValueOutOfRange(ValidationError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"p-value at index {index} is {value!r}, expected a value in [0, 1]")


class MissingValue(ValidationError):
    def __init__(self, index, field):
        self.index = index
        self.field = field
        super().__init__(f"missing {field} at index {index}")


class MixedCovariateKinds(ValidationError):
    pass


class EmptyFold(ValidationError):
    pass


class TooFewHypotheses(ValidationError):
    pass


class MissingFoldLabels(ValidationError):
    pass


class NegativeWeight(ValidationError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"weight at index {index} is {value!r}, expected a finite nonnegative value")


class EmptyInput(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NonpositiveWeight(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NumericalFailure(IhwError):
    """The solver could not produce a trustworthy answer."""


class TooManyBins(ValidationError):
    pass


class InvalidConfig(IhwError):
    pass


class InvalidLevel(InvalidConfig):
    pass


class InvalidTauPrime(InvalidConfig):
    pass


class ConfigMismatch(InvalidConfig):
    """Configuration options that are individually valid but incompatible."""
