"""Input validation utilities for stability verification."""

from typing import Any, Sequence

import numpy as np

from jordan_stability.exceptions import InvalidInputError


def validate_positive(value: float, param_name: str) -> None:
    """
    Validate a strictly positive real, such as a tolerance or a radius.

    NaN is rejected along with zero and negative values.

    :param value: Real to check.
    :param param_name: Name used in the error message.
    :raises InvalidInputError: If value is not > 0.
    """
    if not value > 0:
        raise InvalidInputError(f"{param_name} must be > 0, got {value!r}")


def validate_non_negative(value: float, param_name: str) -> None:
    """
    Validate a real that may be zero, such as theta or a perturbation scale.

    :param value: Real to check.
    :param param_name: Name used in the error message.
    :raises InvalidInputError: If value is < 0 or NaN.
    """
    if not value >= 0:
        raise InvalidInputError(f"{param_name} must be >= 0, got {value!r}")


def validate_non_empty(sequence: Sequence[Any], param_name: str) -> None:
    """
    Validate that a sample set or tuple list has at least one entry.

    :param sequence: Samples or argument tuples.
    :param param_name: Name used in the error message.
    :raises InvalidInputError: If there are no entries.
    """
    if len(sequence) == 0:
        raise InvalidInputError(f"{param_name} needs at least one entry")


def validate_open_interval(value: float, low: float, high: float, param_name: str) -> None:
    """
    Validate that a value lies strictly between two bounds.

    :param value: The value to validate.
    :param low: Exclusive lower bound.
    :param high: Exclusive upper bound.
    :param param_name: The name of the parameter being validated.
    :raises InvalidInputError: If value is not in (low, high).
    """
    if not low < value < high:
        raise InvalidInputError(f"{param_name} must be in ({low}, {high}), got {value}")


def validate_min_int(value: int, minimum: int, param_name: str) -> None:
    """
    Validate that an integer is at least a given minimum.

    :param value: The value to validate.
    :param minimum: Smallest admissible value.
    :param param_name: The name of the parameter being validated.
    :raises InvalidInputError: If value is not an integer or is below minimum.
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidInputError(f"{param_name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidInputError(f"{param_name} must be at least {minimum}, got {value}")


def validate_same_dim(dim: int, other: int, param_name: str) -> None:
    """
    Validate that an element has the dimension a map or sample set expects.

    :param dim: The expected matrix size k.
    :param other: The size of the supplied element.
    :param param_name: The name of the parameter being validated.
    :raises InvalidInputError: If the sizes differ.
    """
    if dim != other:
        raise InvalidInputError(f"{param_name} must be {dim}x{dim}, got {other}x{other}")
