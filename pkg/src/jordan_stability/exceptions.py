import typing


class StabilityError(Exception):
    """Base exception for all stability verification errors."""

    pass


class InvalidInputError(StabilityError):
    """Raised when input validation fails."""

    pass


class MalformedElementError(InvalidInputError):
    """Raised when a matrix is not square or has non-finite entries."""

    pass


class ConfigError(StabilityError):
    """Raised when a configuration value is invalid.

    :param message: Description of the problem.
    :param field: Dotted path of the offending configuration key, if known.
    """

    def __init__(self, message: str, field: typing.Optional[str] = None) -> None:
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class CalculationError(StabilityError):
    """Raised when calculation cannot be completed."""

    pass


class IterateOverflowError(CalculationError):
    """Raised when a map evaluation or a scaled iterate becomes non-finite.

    :param magnitude: Operator norm of the argument that produced the overflow.
    :param step: Iteration index m of the scaled iterate, if known.
    """

    def __init__(self, magnitude: float, step: typing.Optional[int] = None) -> None:
        self.magnitude = magnitude
        self.step = step
        where = f" at iteration m={step}" if step is not None else ""
        super().__init__(f"non-finite value{where} for argument of norm {magnitude:.6g}")


class InsufficientDataError(CalculationError):
    """Raised when a residual trail is too short to estimate a rate."""

    pass


class DegenerateCloudError(CalculationError):
    """Raised when every argument tuple of a sample cloud had to be skipped."""

    pass


class ContractViolationError(CalculationError):
    """Raised when a user supplied control function returns a negative value."""

    pass


class ReportIOError(StabilityError):
    """Raised when a report file cannot be written or read."""

    pass
