"""Deterministic pointwise maps A -> A on M_k(C).

Every map is an immutable callable ``f(x)``. Scenario maps are manufactured as
an exact derivation plus a controlled perturbation, so the derivation the
corrector should recover is known in advance.
"""

import abc
import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from jordan_stability.constants import HERMITIAN_TOLERANCE, UNIT_NORM_TOLERANCE
from jordan_stability.core.algebra import (
    AlgebraElement,
    _frozen,
    commutator,
    dim_of,
    element,
    involution,
    is_hermitian,
    op_norm,
    op_norms,
)
from jordan_stability.exceptions import ConfigError, InvalidInputError, IterateOverflowError
from jordan_stability.validation import validate_same_dim

logger = logging.getLogger(__name__)

PERTURBATION_SHAPES = ("power", "bounded", "constant-shift", "odd-power")


class AlgebraMap(abc.ABC):
    """
    Base class of all maps A -> A.

    Subclasses implement ``_apply_many`` on (N, k, k) stacks. Calling the map
    at one point, or ``map_many`` on a stack, checks the argument dimension and
    that the values are finite.
    """

    kind: typing.ClassVar[str] = "abstract"

    def __init__(self, dim: int) -> None:
        self._dim = dim

    @property
    def dim(self) -> int:
        """Matrix size k of the domain and codomain."""
        return self._dim

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        arr = np.asarray(x)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"x must be a square matrix, got shape {arr.shape}")
        validate_same_dim(self._dim, arr.shape[0], "x")
        value = np.asarray(self._apply_many(arr[np.newaxis]))[0]
        if not np.all(np.isfinite(value)):
            raise IterateOverflowError(_magnitude(arr))
        return _frozen(value)

    def map_many(
        self, xs: npt.ArrayLike, check_finite: bool = True
    ) -> npt.NDArray[np.complex128]:
        """
        Evaluate the map on a stack of arguments.

        :param xs: Array of shape (N, k, k).
        :param check_finite: Raise on non-finite values; composite maps pass
            False to their parts and check once.
        :return: Array of shape (N, k, k) with the value at each argument.
        :raises InvalidInputError: If xs is not a stack of k x k matrices.
        :raises IterateOverflowError: If check_finite is set and a value is not finite.
        """
        arr = np.asarray(xs, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise InvalidInputError(f"xs must be a stack of square matrices, got shape {arr.shape}")
        validate_same_dim(self._dim, arr.shape[1], "xs")
        if arr.shape[0] == 0:
            return np.zeros(arr.shape, dtype=np.complex128)
        values = np.asarray(self._apply_many(arr), dtype=np.complex128)
        if check_finite:
            finite = np.all(np.isfinite(values.reshape(len(values), -1)), axis=1)
            if not np.all(finite):
                raise IterateOverflowError(_magnitude(arr[int(np.argmin(finite))]))
        return values

    @abc.abstractmethod
    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        """Evaluate the map on a validated (N, k, k) stack."""

    def describe(self) -> str:
        """Short human readable description used in logs and reports."""
        return f"{self.kind} on M_{self._dim}"

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.describe()}>"


def _magnitude(arr: npt.NDArray[np.complex128]) -> float:
    return op_norm(arr) if np.all(np.isfinite(arr)) else math.inf


def evaluate(f: AlgebraMap, x: AlgebraElement) -> AlgebraElement:
    """
    Evaluate a map at a point.

    :param f: The map.
    :param x: Argument of matching dimension.
    :return: f(x).
    :raises InvalidInputError: If dimensions differ.
    :raises IterateOverflowError: If the value is not finite.
    """
    return f(x)


class InnerDerivation(AlgebraMap):
    """The inner derivation x -> bx - xb."""

    kind = "inner-derivation"

    def __init__(self, b: AlgebraElement) -> None:
        self.b = element(b)
        super().__init__(dim_of(self.b))

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        return commutator(self.b, xs)

    def describe(self) -> str:
        return f"inner-derivation on M_{self.dim} (||b|| = {op_norm(self.b):.6g})"


class LinearMap(AlgebraMap):
    """
    A complex-linear map given by a k^2 x k^2 matrix acting on row-major vec(x).
    """

    kind = "linear"

    def __init__(self, matrix: typing.Any) -> None:
        mat = np.array(matrix, dtype=np.complex128)
        size = mat.shape[0] if mat.ndim == 2 else -1
        dim = math.isqrt(size) if size > 0 else 0
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or dim * dim != size:
            raise InvalidInputError(f"linear map matrix must be k^2 x k^2, got {mat.shape}")
        mat.setflags(write=False)
        self.matrix = mat
        super().__init__(dim)

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        return (xs.reshape(len(xs), -1) @ self.matrix.T).reshape(xs.shape)


class FunctionMap(AlgebraMap):
    """A map given by an arbitrary deterministic callable."""

    kind = "custom"

    def __init__(
        self,
        func: typing.Callable[[AlgebraElement], typing.Any],
        dim: int,
        name: str = "custom",
    ) -> None:
        self.func = func
        self.name = name
        super().__init__(dim)

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        return np.stack([np.asarray(self.func(x), dtype=np.complex128) for x in xs])

    def describe(self) -> str:
        return f"{self.name} on M_{self.dim}"


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """
    A controlled perturbation g added to a base map.

    Shapes:
        - ``power``: g(x) = theta * ||x||^exponent * E (0 at x = 0)
        - ``bounded``: g(x) = theta * min(1, ||x||) * E
        - ``constant-shift``: g(x) = E
        - ``odd-power``: g(x) = theta * ||x||^(exponent - 1) * (E x + x E) / 2 (0 at x = 0)

    With ``star_compatible`` the direction must be Hermitian, which makes
    g(x*) = g(x)* for every shape.

    :raises ConfigError: If E is not of norm 1, theta is negative, the shape is
        unknown or a star-compatible direction is not Hermitian.
    """

    shape: str
    direction: AlgebraElement
    theta: float = 0.0
    exponent: float = 1.0
    star_compatible: bool = False

    def __post_init__(self) -> None:
        if self.shape not in PERTURBATION_SHAPES:
            raise ConfigError(
                f"unknown perturbation shape {self.shape!r}, expected one of {PERTURBATION_SHAPES}",
                field="shape",
            )
        direction = element(self.direction)
        object.__setattr__(self, "direction", direction)
        norm = op_norm(direction)
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            raise ConfigError(
                f"direction must have operator norm 1, got {norm:.12g}", field="direction"
            )
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise ConfigError(f"theta must be non-negative, got {self.theta}", field="theta")
        if not math.isfinite(self.exponent):
            raise ConfigError(f"exponent must be finite, got {self.exponent}", field="exponent")
        if self.star_compatible and not is_hermitian(direction, atol=HERMITIAN_TOLERANCE):
            raise ConfigError(
                "star-compatible perturbation needs a Hermitian direction", field="direction"
            )

    @classmethod
    def power(
        cls, theta: float, p: float, direction: AlgebraElement, star_compatible: bool = False
    ) -> "PerturbationSpec":
        """Perturbation x -> theta * ||x||^p * E."""
        return cls("power", direction, theta, p, star_compatible)

    @classmethod
    def bounded(
        cls, c: float, direction: AlgebraElement, star_compatible: bool = False
    ) -> "PerturbationSpec":
        """Perturbation x -> c * min(1, ||x||) * E."""
        return cls("bounded", direction, c, 1.0, star_compatible)

    @classmethod
    def constant_shift(
        cls, direction: AlgebraElement, star_compatible: bool = False
    ) -> "PerturbationSpec":
        """Perturbation x -> E."""
        return cls("constant-shift", direction, 1.0, 0.0, star_compatible)

    @classmethod
    def odd_power(
        cls, theta: float, s: float, direction: AlgebraElement, star_compatible: bool = False
    ) -> "PerturbationSpec":
        """Perturbation x -> theta * ||x||^(s-1) * (Ex + xE) / 2."""
        return cls("odd-power", direction, theta, s, star_compatible)

    def term(self, x: AlgebraElement) -> npt.NDArray[np.complex128]:
        """Evaluate the perturbation g at x."""
        return self.term_many(np.asarray(x)[np.newaxis])[0]

    def term_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        """Evaluate the perturbation g on an (N, k, k) stack, one norm per row."""
        arr = np.asarray(xs, dtype=np.complex128)
        E = np.asarray(self.direction)
        if self.shape == "constant-shift":
            return np.broadcast_to(E, arr.shape).copy()
        norms = op_norms(arr)
        if self.shape == "bounded":
            return self.theta * np.minimum(1.0, norms)[:, np.newaxis, np.newaxis] * E
        out = np.zeros(arr.shape, dtype=np.complex128)
        live = norms > 0.0
        if self.theta == 0.0 or not np.any(live):
            return out
        if self.shape == "power":
            scale = self.theta * norms[live] ** self.exponent
            out[live] = scale[:, np.newaxis, np.newaxis] * E
        else:
            scale = self.theta * norms[live] ** (self.exponent - 1.0)
            out[live] = scale[:, np.newaxis, np.newaxis] * ((E @ arr[live] + arr[live] @ E) / 2.0)
        return out

    def describe(self) -> str:
        if self.shape == "constant-shift":
            return "constant-shift"
        if self.shape == "bounded":
            return f"bounded(c={self.theta:g})"
        return f"{self.shape}(theta={self.theta:g}, exponent={self.exponent:g})"


class PerturbedMap(AlgebraMap):
    """The map x -> base(x) + g(x)."""

    kind = "perturbed"

    def __init__(self, base: AlgebraMap, perturbation: PerturbationSpec) -> None:
        validate_same_dim(base.dim, dim_of(perturbation.direction), "perturbation direction")
        self.base = base
        self.perturbation = perturbation
        super().__init__(base.dim)

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        return self.base.map_many(xs, check_finite=False) + self.perturbation.term_many(xs)

    def describe(self) -> str:
        return f"{self.base.describe()} + {self.perturbation.describe()}"


class OddPart(AlgebraMap):
    """The odd part x -> (f(x) - f(-x)) / 2."""

    kind = "odd-part"

    def __init__(self, inner: AlgebraMap) -> None:
        self.inner = inner
        super().__init__(inner.dim)

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        forward = self.inner.map_many(xs, check_finite=False)
        return (forward - self.inner.map_many(-xs, check_finite=False)) / 2.0

    def describe(self) -> str:
        return f"odd part of ({self.inner.describe()})"


def inner_derivation(b: AlgebraElement) -> InnerDerivation:
    """
    Build the inner derivation D_b(x) = bx - xb.

    D_b is linear, satisfies the Leibniz rule and is an n-Jordan derivation for
    every n >= 2. It is a *-derivation when b is skew-adjoint (b* = -b).

    :param b: Generator of the derivation.
    :return: The map x -> bx - xb.

    Example:
        ```python
        D = inner_derivation(element([[1, 0], [0, 0]]))
        print(D(element([[0, 1], [0, 0]])))  # [[0, 1], [0, 0]]
        ```
    """
    return InnerDerivation(b)


def perturb(base: AlgebraMap, spec: PerturbationSpec) -> PerturbedMap:
    """
    Add a controlled perturbation to a map.

    :param base: Map to perturb.
    :param spec: The perturbation.
    :return: The map x -> base(x) + g(x).
    :raises InvalidInputError: If the direction does not live in the map's algebra.
    """
    perturbed = PerturbedMap(base, spec)
    logger.debug("perturbed map: %s", perturbed.describe())
    return perturbed


def oddify(f: AlgebraMap) -> OddPart:
    """
    Return the odd part of a map.

    Formula:
        g(x) = (f(x) - f(-x)) / 2, so g(-x) = -g(x) exactly.

    :param f: Any map.
    :return: The odd part of f.
    """
    return OddPart(f)


def zero_map(dim: int) -> LinearMap:
    """The zero map of M_dim(C)."""
    return LinearMap(np.zeros((dim * dim, dim * dim)))


def identity_map(dim: int) -> LinearMap:
    """The identity map of M_dim(C)."""
    return LinearMap(np.eye(dim * dim))


def constant_map(direction: AlgebraElement) -> PerturbedMap:
    """The constant map x -> E for a direction E of norm 1."""
    E = element(direction)
    return perturb(zero_map(dim_of(E)), PerturbationSpec.constant_shift(E))


def involution_map(dim: int) -> FunctionMap:
    """The conjugate-linear map x -> x*."""
    return FunctionMap(involution, dim, name="involution")


def square_map(dim: int) -> FunctionMap:
    """The map x -> x^2."""
    return FunctionMap(lambda x: x @ x, dim, name="square")
