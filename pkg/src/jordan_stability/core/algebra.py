"""Finite-dimensional matrix C*-algebra M_k(C).

Elements are read-only ``complex128`` numpy arrays of shape (k, k). The norm is
the operator norm (largest singular value) and the involution is the conjugate
transpose, so M_k(C) is at once a Banach algebra and a C*-algebra.

Sample distributions (all scaled so that ``op_norm <= radius``):

- ``dense-gaussian``: Ginibre matrix, real and imaginary parts i.i.d. N(0, 1/2).
- ``hermitian``: (G + G*) / 2 for a Ginibre matrix G.
- ``diagonal``: diagonal matrix with complex Gaussian entries.
- ``sparse``: Ginibre matrix with each entry kept with probability 0.3
  (at least one entry is kept).

Each sample is normalised to operator norm 1 and multiplied by ``radius * u``
with u uniform on (0, 1], so sample norms are uniform on (0, radius].
Samples are drawn one at a time from ``numpy.random.default_rng(seed)``; a
larger ``count`` with the same seed extends the same sequence.
"""

import cmath
import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from jordan_stability.constants import UNIT_MODULUS_TOLERANCE
from jordan_stability.exceptions import ConfigError, InvalidInputError, MalformedElementError
from jordan_stability.validation import validate_min_int

logger = logging.getLogger(__name__)

AlgebraElement = npt.NDArray[np.complex128]
UnitScalar = complex

DISTRIBUTIONS = ("dense-gaussian", "hermitian", "diagonal", "sparse")
SPARSE_DENSITY = 0.3


def element(entries: typing.Any) -> AlgebraElement:
    """
    Build a well-formed algebra element from array-like entries.

    :param entries: A square array-like of numbers.
    :return: Read-only complex128 array of shape (k, k).
    :raises MalformedElementError: If entries are not a non-empty square matrix
        or contain NaN/Inf.

    Example:
        ```python
        a = element([[0, 1j], [0, 0]])
        print(a.shape)  # (2, 2)
        ```
    """
    arr = np.array(entries, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise MalformedElementError(f"element must be a non-empty square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedElementError("element has non-finite entries")
    arr.setflags(write=False)
    return arr


def _frozen(arr: npt.NDArray[typing.Any]) -> AlgebraElement:
    # Callers pass freshly computed arrays only.
    out = np.asarray(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


def identity(dim: int) -> AlgebraElement:
    """Return the unit of M_dim(C)."""
    validate_min_int(dim, 1, "dim")
    return _frozen(np.eye(dim, dtype=np.complex128))


def zero(dim: int) -> AlgebraElement:
    """Return the zero element of M_dim(C)."""
    validate_min_int(dim, 1, "dim")
    return _frozen(np.zeros((dim, dim), dtype=np.complex128))


def dim_of(a: AlgebraElement) -> int:
    """Return the matrix size k of an element."""
    return int(a.shape[0])


def op_norm(a: AlgebraElement) -> float:
    """
    Calculate the operator norm of an element.

    The operator norm is the largest singular value. It is the C*-norm of
    M_k(C): ||a* a|| = ||a||^2 and ||ab|| <= ||a|| ||b||.

    Formula:
        ||a|| = sigma_max(a)

    :param a: A square complex matrix.
    :return: The largest singular value, a non-negative float.
    :raises MalformedElementError: If a is not square or has non-finite entries.

    Example:
        ```python
        print(op_norm(element([[3, 0], [0, 4j]])))  # 4.0
        ```
    """
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MalformedElementError(f"element must be a square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedElementError("element has non-finite entries")
    return float(np.linalg.svd(arr, compute_uv=False)[0])


def op_norms(stack: npt.NDArray[np.complex128]) -> npt.NDArray[np.float64]:
    """
    Calculate the operator norm of every element in a stack.

    :param stack: Array of shape (N, k, k).
    :return: Float array of shape (N,).
    :raises MalformedElementError: If the stack is not (N, k, k) or has non-finite entries.
    """
    arr = np.asarray(stack)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise MalformedElementError(f"stack must have shape (N, k, k), got {arr.shape}")
    if arr.shape[0] == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(arr)):
        raise MalformedElementError("stack has non-finite entries")
    return np.asarray(np.linalg.svd(arr, compute_uv=False)[:, 0], dtype=np.float64)


def stack_elements(elements: typing.Iterable[AlgebraElement]) -> npt.NDArray[np.complex128]:
    """Stack elements of one algebra into an (N, k, k) complex array."""
    return np.stack([np.asarray(e, dtype=np.complex128) for e in elements])


def involution(a: AlgebraElement) -> AlgebraElement:
    """
    Return the adjoint (conjugate transpose) of an element.

    :param a: A square complex matrix.
    :return: a*, with involution(involution(a)) equal to a entry for entry.
    """
    return _frozen(np.conj(np.asarray(a)).T.copy())


def power(a: AlgebraElement, n: int) -> AlgebraElement:
    """
    Calculate the matrix power a^n by repeated multiplication.

    :param a: A square complex matrix.
    :param n: Exponent, at least 1.
    :return: a^n.
    :raises InvalidInputError: If n < 1.

    Example:
        ```python
        print(power(element([[2, 0], [0, 3]]), 3))  # diag(8, 27)
        ```
    """
    validate_min_int(n, 1, "n")
    result = np.array(a, dtype=np.complex128)
    for _ in range(n - 1):
        result = result @ a
    return _frozen(result)


def commutator(b: AlgebraElement, x: AlgebraElement) -> AlgebraElement:
    """Return bx - xb. ``x`` may be a single element or an (N, k, k) stack."""
    return _frozen(b @ x - x @ b)


def is_hermitian(a: AlgebraElement, atol: float = 0.0) -> bool:
    """Return True if a equals its involution within atol per entry."""
    return bool(np.allclose(a, np.conj(a).T, rtol=0.0, atol=atol))


def is_skew_adjoint(a: AlgebraElement, atol: float = 0.0) -> bool:
    """Return True if a* = -a within atol per entry."""
    return bool(np.allclose(np.conj(a).T, -np.asarray(a), rtol=0.0, atol=atol))


def unit_scalar(value: complex, tolerance: float = UNIT_MODULUS_TOLERANCE) -> UnitScalar:
    """
    Validate a scalar on the unit circle.

    :param value: Complex number.
    :param tolerance: Allowed deviation of |value| from 1.
    :return: The value as a Python complex.
    :raises InvalidInputError: If | |value| - 1 | > tolerance.
    """
    mu = complex(value)
    if abs(abs(mu) - 1.0) > tolerance:
        raise InvalidInputError(f"unit scalar must have modulus 1, got |{mu}| = {abs(mu)}")
    return mu


def sample_unit_scalars(K: int) -> typing.List[UnitScalar]:
    """
    Return the K-th roots of unity e^(2 pi i k / K), k = 0..K-1.

    :param K: Number of scalars, at least 1.
    :return: List of unit scalars starting at 1.
    :raises InvalidInputError: If K < 1.

    Example:
        ```python
        print(sample_unit_scalars(4))  # approximately [1, 1j, -1, -1j]
        ```
    """
    validate_min_int(K, 1, "K")
    return [1.0 + 0.0j] + [cmath.exp(2j * math.pi * k / K) for k in range(1, K)]


@dataclass(frozen=True)
class SampleSpec:
    """
    Reproducible description of a sample cloud in M_dim(C).

    :param dim: Matrix size k.
    :param count: Number of samples, at least 1.
    :param radius: Upper bound for the operator norm of every sample.
    :param distribution: One of ``DISTRIBUTIONS``.
    :param seed: Seed for ``numpy.random.default_rng``.
    """

    dim: int
    count: int
    radius: float
    distribution: str = "dense-gaussian"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(
                f"unknown distribution {self.distribution!r}, expected one of {DISTRIBUTIONS}",
                field="distribution",
            )
        if isinstance(self.dim, bool) or not isinstance(self.dim, int) or self.dim < 1:
            raise ConfigError(f"dim must be a positive integer, got {self.dim!r}", field="dim")
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count < 1:
            raise ConfigError(
                f"count must be a positive integer, got {self.count!r}", field="count"
            )
        if not (isinstance(self.radius, (int, float)) and math.isfinite(self.radius)) or not (
            self.radius > 0
        ):
            raise ConfigError(f"radius must be positive, got {self.radius!r}", field="radius")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(
                f"seed must be an unsigned 64-bit integer, got {self.seed}", field="seed"
            )


def _ginibre(rng: np.random.Generator, dim: int) -> npt.NDArray[np.complex128]:
    real = rng.standard_normal((dim, dim))
    imag = rng.standard_normal((dim, dim))
    return (real + 1j * imag) / math.sqrt(2.0)


def _draw_direction(rng: np.random.Generator, dim: int, distribution: str) -> AlgebraElement:
    while True:
        if distribution == "dense-gaussian":
            raw = _ginibre(rng, dim)
        elif distribution == "hermitian":
            g = _ginibre(rng, dim)
            raw = (g + np.conj(g).T) / 2.0
        elif distribution == "diagonal":
            raw = np.diag(_ginibre(rng, dim)[0])
        else:
            mask = rng.random((dim, dim)) < SPARSE_DENSITY
            mask[rng.integers(dim), rng.integers(dim)] = True
            raw = _ginibre(rng, dim) * mask
        norm = float(np.linalg.norm(raw, 2))
        if norm > 0.0:
            return raw / norm


def sample_elements(spec: SampleSpec) -> typing.List[AlgebraElement]:
    """
    Draw a deterministic sample cloud.

    :param spec: The cloud description.
    :return: ``spec.count`` elements with op_norm <= spec.radius.

    Example:
        ```python
        cloud = sample_elements(SampleSpec(dim=2, count=100, radius=2.0, seed=7))
        print(max(op_norm(a) for a in cloud) <= 2.0)  # True
        ```
    """
    rng = np.random.default_rng(spec.seed)
    samples = []
    for _ in range(spec.count):
        direction = _draw_direction(rng, spec.dim, spec.distribution)
        scale = spec.radius * (1.0 - rng.random())
        samples.append(_frozen(direction * scale))
    logger.debug(
        "sampled %d %s elements of M_%d (radius %g, seed %d)",
        spec.count,
        spec.distribution,
        spec.dim,
        spec.radius,
        spec.seed,
    )
    return samples


def random_element(
    rng: np.random.Generator, dim: int, kind: str = "dense", norm: float = 1.0
) -> AlgebraElement:
    """
    Draw a single element of a prescribed operator norm.

    :param rng: Numpy random generator.
    :param dim: Matrix size k.
    :param kind: ``dense``, ``hermitian`` or ``skew`` (skew-adjoint, b* = -b).
    :param norm: Operator norm of the result, non-negative.
    :return: The element.
    :raises InvalidInputError: If kind is unknown.
    """
    if kind == "dense":
        raw = _draw_direction(rng, dim, "dense-gaussian")
    elif kind == "hermitian":
        raw = _draw_direction(rng, dim, "hermitian")
    elif kind == "skew":
        raw = 1j * _draw_direction(rng, dim, "hermitian")
    else:
        raise InvalidInputError(f"unknown element kind {kind!r}")
    return _frozen(raw * norm)
