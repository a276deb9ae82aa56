"""Control functions, their scaling law and the generalized metric on maps."""

import enum
import logging
import math
import typing
from dataclasses import dataclass, replace

import numpy as np
import numpy.typing as npt

from jordan_stability.constants import NUMERATOR_FLOOR, SCALING_SLACK, ZERO_FLOOR
from jordan_stability.core.algebra import AlgebraElement, op_norm, op_norms
from jordan_stability.core.maps import AlgebraMap
from jordan_stability.exceptions import ContractViolationError, InvalidInputError
from jordan_stability.validation import (
    validate_non_empty,
    validate_non_negative,
    validate_open_interval,
)

logger = logging.getLogger(__name__)

CONTROL_SHAPES = ("power-sum", "product-power", "power-sum-star", "product-power-star", "custom")

ArgumentTuple = typing.Tuple[AlgebraElement, ...]
CustomControl = typing.Callable[..., float]


class Anchor(str, enum.Enum):
    """Which control arguments receive x when a single point is measured."""

    X00 = "x,0,0"
    X3X0 = "x,3x,0"

    def arguments(self, x: AlgebraElement, arity: int) -> ArgumentTuple:
        """Return the control arguments (x, 0, 0[, 0]) or (x, 3x, 0[, 0]); x may be a stack."""
        origin = np.zeros_like(x)
        y = origin if self is Anchor.X00 else 3.0 * x
        return (x, y, origin) if arity == 3 else (x, y, origin, origin)


@dataclass(frozen=True, eq=False)
class ControlFunction:
    """
    A control function phi: A^3 -> [0, inf) or A^4 -> [0, inf).

    phi is theta times a base shape. Built-in shapes and their contraction
    constants:

        - power-sum: theta (||x||^p + ||y||^p + ||a||^p), L = 2^(p-1), 0 < p < 1
        - product-power: theta (||x||^r ||y||^r + ||a||^(2r)), L = 2^(2r-1), 0 < r < 1/2
        - star variants add ||w||^p (resp. ||w||^r) as a fourth argument term
        - custom: theta * func(x, y, a[, w]) with a declared L in (0, 1)

    Use the constructors ``power_sum``, ``product_power``, ``power_sum_star``,
    ``product_power_star`` and ``custom``.
    """

    shape: str
    theta: float
    exponent: float
    L: float
    arity: int
    func: typing.Optional[CustomControl] = None

    def with_theta(self, theta: float) -> "ControlFunction":
        """Return the same shape with another theta."""
        validate_non_negative(theta, "theta")
        return replace(self, theta=theta)

    @property
    def is_star(self) -> bool:
        """True for four-argument controls."""
        return self.arity == 4

    def describe(self) -> str:
        if self.shape == "custom":
            return f"custom(arity={self.arity}, L={self.L:g}, theta={self.theta:g})"
        name = "p" if self.shape.startswith("power-sum") else "r"
        return f"{self.shape}(theta={self.theta:g}, {name}={self.exponent:g})"


def power_sum(theta: float, p: float) -> ControlFunction:
    """
    Build phi(x, y, a) = theta (||x||^p + ||y||^p + ||a||^p) with L = 2^(p-1).

    :param theta: Non-negative scale.
    :param p: Exponent in (0, 1).
    :raises InvalidInputError: If theta < 0 or p is outside (0, 1).
    """
    validate_non_negative(theta, "theta")
    validate_open_interval(p, 0.0, 1.0, "p")
    return ControlFunction("power-sum", theta, p, 2.0 ** (p - 1.0), 3)


def power_sum_star(theta: float, p: float) -> ControlFunction:
    """Build phi(x, y, a, w) = theta (||x||^p + ||y||^p + ||a||^p + ||w||^p)."""
    validate_non_negative(theta, "theta")
    validate_open_interval(p, 0.0, 1.0, "p")
    return ControlFunction("power-sum-star", theta, p, 2.0 ** (p - 1.0), 4)


def product_power(theta: float, r: float) -> ControlFunction:
    """
    Build phi(x, y, a) = theta (||x||^r ||y||^r + ||a||^(2r)) with L = 2^(2r-1).

    :param theta: Non-negative scale.
    :param r: Exponent in (0, 1/2).
    :raises InvalidInputError: If theta < 0 or r is outside (0, 1/2).
    """
    validate_non_negative(theta, "theta")
    validate_open_interval(r, 0.0, 0.5, "r")
    return ControlFunction("product-power", theta, r, 2.0 ** (2.0 * r - 1.0), 3)


def product_power_star(theta: float, r: float) -> ControlFunction:
    """Build phi(x, y, a, w) = theta (||x||^r ||y||^r + ||a||^(2r) + ||w||^r)."""
    validate_non_negative(theta, "theta")
    validate_open_interval(r, 0.0, 0.5, "r")
    return ControlFunction("product-power-star", theta, r, 2.0 ** (2.0 * r - 1.0), 4)


def custom(func: CustomControl, L: float, arity: int = 3, theta: float = 1.0) -> ControlFunction:
    """
    Wrap a user supplied control function.

    The scaling law phi <= 2L phi(half arguments) is not derived; verify it
    with ``scaling_check``.

    :param func: Callable taking ``arity`` elements and returning a float.
    :param L: Declared contraction constant in (0, 1).
    :param arity: 3 or 4.
    :param theta: Scale applied to func.
    :raises InvalidInputError: If L or arity is invalid.
    """
    validate_open_interval(L, 0.0, 1.0, "L")
    validate_non_negative(theta, "theta")
    if arity not in (3, 4):
        raise InvalidInputError(f"arity must be 3 or 4, got {arity}")
    return ControlFunction("custom", theta, math.nan, L, arity, func)


def phi_eval(
    phi: ControlFunction,
    x: AlgebraElement,
    y: AlgebraElement,
    a: AlgebraElement,
    w: typing.Optional[AlgebraElement] = None,
) -> float:
    """
    Evaluate a control function.

    :param phi: The control function.
    :param x: First argument.
    :param y: Second argument.
    :param a: Third (n-Jordan) argument.
    :param w: Fourth (star) argument, required iff phi has arity 4.
    :return: phi(x, y, a[, w]) >= 0.
    :raises InvalidInputError: If the number of arguments does not match the arity.
    :raises ContractViolationError: If a custom function returns a negative value.

    Example:
        ```python
        x = 4.0 * identity(2)
        print(phi_eval(power_sum(1.0, 0.5), x, zero(2), zero(2)))  # 2.0
        ```
    """
    _check_arity(phi, w)
    if phi.theta == 0.0:
        return 0.0
    if phi.shape == "custom":
        assert phi.func is not None
        args = (x, y, a) if w is None else (x, y, a, w)
        value = float(phi.func(*args))
        if not value >= 0.0:
            raise ContractViolationError(f"custom control function returned {value}")
        return phi.theta * value
    args = (x, y, a) if w is None else (x, y, a, w)
    return float(phi_eval_many(phi, *(np.asarray(arg)[np.newaxis] for arg in args))[0])


def _check_arity(phi: ControlFunction, w: typing.Optional[typing.Any]) -> None:
    if (w is None) != (phi.arity == 3):
        supplied = 3 if w is None else 4
        raise InvalidInputError(f"control has arity {phi.arity}, got {supplied} arguments")


def phi_eval_many(
    phi: ControlFunction,
    x: npt.NDArray[np.complex128],
    y: npt.NDArray[np.complex128],
    a: npt.NDArray[np.complex128],
    w: typing.Optional[npt.NDArray[np.complex128]] = None,
) -> npt.NDArray[np.float64]:
    """
    Evaluate a control function on (N, k, k) stacks of arguments.

    :return: phi at every row, shape (N,).
    :raises InvalidInputError: If the number of arguments does not match the arity.
    :raises ContractViolationError: If a custom function returns a negative value.
    """
    _check_arity(phi, w)
    count = len(x)
    if phi.theta == 0.0:
        return np.zeros(count)
    if phi.shape == "custom":
        rows = zip(x, y, a) if w is None else zip(x, y, a, w)
        return np.array([phi_eval(phi, *args) for args in rows], dtype=np.float64)
    q = phi.exponent
    nx, ny, na = op_norms(x), op_norms(y), op_norms(a)
    if phi.shape.startswith("power-sum"):
        base = nx**q + ny**q + na**q
    else:
        base = (nx * ny) ** q + na ** (2.0 * q)
    if w is not None:
        base = base + op_norms(w) ** q
    return np.asarray(phi.theta * base, dtype=np.float64)


@dataclass(frozen=True)
class ScalingReport:
    """Outcome of a scaling law check."""

    passed: bool
    worst_ratio: float
    samples_used: int
    worst_index: typing.Optional[int] = None


def scaling_check(phi: ControlFunction, samples: typing.Sequence[ArgumentTuple]) -> ScalingReport:
    """
    Check the scaling law phi(args) <= 2L phi(args / 2) on argument tuples.

    Formula:
        ratio = phi(x, y, a[, w]) / (2L phi(x/2, y/2, a/2[, w/2]))

    A tuple with phi(args / 2) = 0 passes only if phi(args) = 0 as well.

    :param phi: The control function.
    :param samples: Non-empty sequence of argument tuples of phi's arity.
    :return: Report with pass flag and the largest ratio.
    """
    validate_non_empty(samples, "samples")
    width = len(samples[0])
    if any(len(args) != width for args in samples):
        raise InvalidInputError("scaling tuples must all have the same number of arguments")
    columns = [
        np.stack([np.asarray(args[j], dtype=np.complex128) for args in samples])
        for j in range(width)
    ]
    full = phi_eval_many(phi, *columns)
    denominators = 2.0 * phi.L * phi_eval_many(phi, *(column / 2.0 for column in columns))
    vanishing = denominators < ZERO_FLOOR
    ratios = np.where(full > NUMERATOR_FLOOR, math.inf, 0.0)
    ratios[~vanishing] = full[~vanishing] / denominators[~vanishing]
    worst_index = int(np.argmax(ratios))
    worst = float(ratios[worst_index])
    passed = worst <= 1.0 + SCALING_SLACK
    if not passed:
        logger.warning("scaling law fails for %s: worst ratio %.6g", phi.describe(), worst)
    return ScalingReport(passed, worst, len(samples), worst_index)


def scaling_tuples(
    samples: typing.Sequence[AlgebraElement], arity: int, anchor: Anchor = Anchor.X00
) -> typing.List[ArgumentTuple]:
    """
    Build argument tuples for ``scaling_check`` from a sample cloud.

    With the (x,0,0) anchor the tuples are consecutive samples
    (s_i, s_i+1, s_i+2[, s_i+3]); with the (x,3x,0) anchor they are
    (s_i, 3 s_i, s_i+1[, s_i+2]), the only tuples the odd-map argument uses.
    Indices wrap around the cloud.
    """
    validate_non_empty(samples, "samples")
    count = len(samples)
    tuples: typing.List[ArgumentTuple] = []
    for i, x in enumerate(samples):
        nxt = [samples[(i + j) % count] for j in range(1, 4)]
        if anchor is Anchor.X00:
            args = (x, nxt[0], nxt[1], nxt[2])
        else:
            args = (x, 3.0 * x, nxt[0], nxt[1])
        tuples.append(args[:arity])
    return tuples


@dataclass(frozen=True, eq=False)
class GeneralizedDistance:
    """
    Empirical generalized distance sup ||g(x) - h(x)|| / phi(anchor(x)).

    ``value`` is ``math.inf`` when the distance is infinite on the cloud;
    ``witness`` is the sample achieving the supremum (or the infinity).
    """

    value: float
    witness: typing.Optional[AlgebraElement] = None
    samples_used: int = 0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def generalized_distance(
    g: AlgebraMap,
    h: AlgebraMap,
    phi: ControlFunction,
    anchor: Anchor,
    samples: typing.Sequence[AlgebraElement],
) -> GeneralizedDistance:
    """
    Measure the generalized distance between two maps on a sample cloud.

    Formula:
        d(g, h) = sup over x of ||g(x) - h(x)|| / phi(anchor(x))

    Points with phi(anchor(x)) = 0 are ignored when g(x) = h(x) there and make
    the distance infinite otherwise.

    :param g: First map.
    :param h: Second map.
    :param phi: Control function.
    :param anchor: Where x enters phi, (x,0,0) or (x,3x,0).
    :param samples: Non-empty sample cloud.
    :return: The distance with its witness point.

    References:
        - Cadariu, L., & Radu, V. (2003). Fixed points and the stability of
          Jensen's functional equation.
    """
    validate_non_empty(samples, "samples")
    anchor = Anchor(anchor)
    stack = np.stack([np.asarray(x, dtype=np.complex128) for x in samples])
    gaps = op_norms(g.map_many(stack) - h.map_many(stack))
    scales = phi_eval_many(phi, *anchor.arguments(stack, phi.arity))
    vanishing = scales < ZERO_FLOOR
    infinite = vanishing & (gaps > NUMERATOR_FLOOR)
    if np.any(infinite):
        index = int(np.argmax(infinite))
        logger.debug("infinite generalized distance at a point of norm %g", op_norm(stack[index]))
        return GeneralizedDistance(math.inf, samples[index], len(samples))
    usable = np.flatnonzero(~vanishing)
    if usable.size == 0:
        return GeneralizedDistance(0.0, None, len(samples))
    ratios = gaps[usable] / scales[usable]
    best = int(np.argmax(ratios))
    return GeneralizedDistance(float(ratios[best]), samples[usable[best]], len(samples))
