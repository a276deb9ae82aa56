"""
Structure checks on corrected maps and the closed-form error bounds.

Every check returns a ``CheckReport``. Structure checks pass when the largest
defect is at most ``tolerance``; bound checks compare ||f(x) - D(x)|| with the
bound B(x) of the stability statement being instantiated.
"""

import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from jordan_stability.constants import BOUND_ATOL, BOUND_RTOL
from jordan_stability.core.algebra import AlgebraElement, UnitScalar, op_norms, stack_elements
from jordan_stability.core.control import Anchor, ControlFunction, phi_eval_many
from jordan_stability.core.defects import njordan_expressions, star_expressions
from jordan_stability.core.maps import AlgebraMap
from jordan_stability.exceptions import InvalidInputError
from jordan_stability.validation import (
    validate_min_int,
    validate_non_empty,
    validate_non_negative,
    validate_open_interval,
)

logger = logging.getLogger(__name__)

VARIANTS = ("thm21", "thm22", "cor23", "cor24", "thm25", "cor26", "thm27", "cor28", "cor210")
ODD_VARIANTS = ("thm25", "cor26", "thm27", "cor28", "cor210")
STAR_VARIANTS = ("thm22", "cor24", "thm27", "cor28", "cor210")

# Control shapes each corollary is stated for
_COROLLARY_SHAPES = {
    "cor23": "power-sum",
    "cor24": "power-sum-star",
    "cor26": "product-power",
    "cor28": "product-power-star",
    "cor210": "product-power-star",
}

ElementPair = typing.Tuple[AlgebraElement, AlgebraElement]


@dataclass(frozen=True, eq=False)
class BoundSpec:
    """
    A stability statement and the control function it is instantiated with.

    Bounds B(x):
        - thm21, thm22: L/(1-L) * phi(x, 0, 0[, 0])
        - cor23, cor24: 2^p theta/(2-2^p) * ||x||^p
        - thm25, thm27: 1/(2-2L) * phi(x, 3x, 0[, 0])
        - cor26, cor28, cor210: 3^r theta/(2-2^r) * ||x||^(2r)

    :raises InvalidInputError: If the variant is unknown or the control does not
        have the shape or arity the variant is stated for.
    """

    kind: str
    control: ControlFunction

    def __post_init__(self) -> None:
        if self.kind not in VARIANTS:
            raise InvalidInputError(
                f"unknown bound variant {self.kind!r}, expected one of {VARIANTS}"
            )
        required = _COROLLARY_SHAPES.get(self.kind)
        if required is not None and self.control.shape != required:
            raise InvalidInputError(
                f"{self.kind} is stated for {required} controls, got {self.control.shape}"
            )
        arity = 4 if self.kind in STAR_VARIANTS else 3
        if self.control.arity != arity:
            raise InvalidInputError(
                f"{self.kind} needs a control of arity {arity}, got {self.control.arity}"
            )
        validate_open_interval(self.control.L, 0.0, 1.0, "L")

    @property
    def anchor(self) -> Anchor:
        """Where x enters phi in the bound."""
        return Anchor.X3X0 if self.kind in ODD_VARIANTS else Anchor.X00

    @property
    def has_proof_consistent_constant(self) -> bool:
        """True for the product-power corollaries, whose stated denominator is 2 - 2^r."""
        return self.kind in ("cor26", "cor28", "cor210")


def bound_constant(spec: BoundSpec, proof_consistent: bool = False) -> float:
    """
    Calculate the x-independent factor of a stability bound.

    Formula:
        thm21/thm22:        L / (1 - L)
        thm25/thm27:        1 / (2 - 2L)
        cor23/cor24:        2^p theta / (2 - 2^p)
        cor26/cor28/cor210: 3^r theta / (2 - 2^r), or
                            3^r theta / (2 - 2^(2r)) with proof_consistent

    For theorem variants the factor multiplies phi at the anchor; for corollaries
    it multiplies ||x||^p (resp. ||x||^(2r)).

    :param spec: The bound specification.
    :param proof_consistent: Use 1/(2 - 2L) with L = 2^(2r-1) for the
        product-power corollaries.
    :return: The constant, possibly ``math.inf`` when theta is infinite.
    :raises InvalidInputError: If proof_consistent is requested for another variant.

    Example:
        ```python
        print(bound_constant(BoundSpec("cor23", power_sum(1.0, 0.5))))  # 2.41421...
        ```
    """
    if proof_consistent and not spec.has_proof_consistent_constant:
        raise InvalidInputError(f"{spec.kind} has a single bound constant")
    control = spec.control
    L = control.L
    if spec.kind in ("thm21", "thm22"):
        return L / (1.0 - L)
    if spec.kind in ("thm25", "thm27"):
        return 1.0 / (2.0 - 2.0 * L)
    q = control.exponent
    if spec.kind in ("cor23", "cor24"):
        validate_open_interval(q, 0.0, 1.0, "p")
        return 2.0**q * control.theta / (2.0 - 2.0**q)
    validate_open_interval(q, 0.0, 0.5, "r")
    denominator = 2.0 - 2.0 ** (2.0 * q) if proof_consistent else 2.0 - 2.0**q
    return 3.0**q * control.theta / denominator


def bound_value(spec: BoundSpec, x: AlgebraElement, proof_consistent: bool = False) -> float:
    """Evaluate the bound B(x) of a ``BoundSpec`` at x."""
    return float(bound_values(spec, np.asarray(x)[np.newaxis], proof_consistent)[0])


def bound_values(
    spec: BoundSpec, xs: npt.NDArray[np.complex128], proof_consistent: bool = False
) -> npt.NDArray[np.float64]:
    """Evaluate the bound B(x) at every x of an (N, k, k) stack."""
    constant = bound_constant(spec, proof_consistent)
    if spec.kind in ("cor23", "cor24"):
        return constant * op_norms(xs) ** spec.control.exponent
    if spec.kind in ("cor26", "cor28", "cor210"):
        return constant * op_norms(xs) ** (2.0 * spec.control.exponent)
    arguments = spec.anchor.arguments(xs, spec.control.arity)
    return constant * phi_eval_many(spec.control, *arguments)


@dataclass(frozen=True, eq=False)
class CheckReport:
    """
    Outcome of one check over a sample set.

    ``values`` holds the checked quantity per item in input order; for bound
    checks ``bounds`` holds B(x) and ``max_violation`` is the largest
    ||f(x) - D(x)|| / (B(x)(1 + 1e-6) + 1e-9), compared with tolerance 1.
    """

    name: str
    passed: bool
    max_violation: float
    tolerance: float
    samples_used: int
    violating_index: typing.Optional[int] = None
    violating_point: typing.Optional[typing.Tuple[typing.Any, ...]] = None
    values: typing.Tuple[float, ...] = ()
    bounds: typing.Optional[typing.Tuple[float, ...]] = None


def _floats(values: typing.Iterable[float]) -> typing.Tuple[float, ...]:
    return tuple(float(v) for v in values)


def _max_check(
    name: str,
    values: typing.Sequence[float],
    tolerance: float,
    points: typing.Sequence[typing.Tuple[typing.Any, ...]],
) -> CheckReport:
    worst_index = int(np.argmax(values))
    worst = float(values[worst_index])
    passed = worst <= tolerance
    if not passed:
        logger.debug("%s fails: %.6g > %.3g", name, worst, tolerance)
    return CheckReport(
        name,
        passed,
        worst,
        tolerance,
        len(values),
        worst_index,
        points[worst_index] if not passed else None,
        _floats(values),
    )


def check_bound(
    f: AlgebraMap,
    D: AlgebraMap,
    spec: BoundSpec,
    samples: typing.Sequence[AlgebraElement],
    proof_consistent: bool = False,
) -> CheckReport:
    """
    Certify ||f(x) - D(x)|| <= B(x) at every sample.

    A sample passes when ||f(x) - D(x)|| <= B(x) * (1 + 1e-6) + 1e-9. A control
    with infinite theta makes every bound vacuous and the check fails.

    :param f: The approximate map.
    :param D: The corrected map.
    :param spec: The bound specification.
    :param samples: Non-empty sample cloud.
    :param proof_consistent: Use the proof-consistent constant (product-power
        corollaries only).
    :return: Report with the worst violation ratio and its witness.
    """
    validate_non_empty(samples, "samples")
    name = "bound-proof-consistent" if proof_consistent else "bound"
    xs = stack_elements(samples)
    values = op_norms(f.map_many(xs) - D.map_many(xs))
    if math.isinf(spec.control.theta):
        logger.warning("%s: theta is infinite, the hypothesis fails on the cloud", name)
        return CheckReport(name, False, math.inf, 1.0, len(samples), values=_floats(values))
    bounds = bound_values(spec, xs, proof_consistent)
    ratios = values / (bounds * (1.0 + BOUND_RTOL) + BOUND_ATOL)
    worst_index = int(np.argmax(ratios))
    worst = float(ratios[worst_index])
    passed = worst <= 1.0
    if not passed:
        logger.warning(
            "%s for %s fails at sample %d: %.6g > %.6g",
            name,
            spec.kind,
            worst_index,
            values[worst_index],
            bounds[worst_index],
        )
    return CheckReport(
        name,
        passed,
        worst,
        1.0,
        len(samples),
        worst_index,
        (samples[worst_index],) if not passed else None,
        _floats(values),
        _floats(bounds),
    )


def consecutive_pairs(samples: typing.Sequence[AlgebraElement]) -> typing.List[ElementPair]:
    """Pair every sample with its successor, wrapping around the cloud."""
    validate_non_empty(samples, "samples")
    count = len(samples)
    return [(samples[i], samples[(i + 1) % count]) for i in range(count)]


def check_additivity(
    D: AlgebraMap, sample_pairs: typing.Sequence[ElementPair], tolerance: float
) -> CheckReport:
    """
    Check D(z + t) = D(z) + D(t) on sample pairs.

    Formula:
        max ||D(z + t) - D(z) - D(t)|| <= tolerance

    :param D: The map.
    :param sample_pairs: Non-empty sequence of (z, t).
    :param tolerance: Largest admissible defect.
    :return: The report.
    """
    validate_non_empty(sample_pairs, "sample_pairs")
    validate_non_negative(tolerance, "tolerance")
    zs = stack_elements(z for z, _ in sample_pairs)
    ts = stack_elements(t for _, t in sample_pairs)
    values = op_norms(D.map_many(zs + ts) - D.map_many(zs) - D.map_many(ts))
    return _max_check("additivity", values, tolerance, sample_pairs)


def check_homogeneity(
    D: AlgebraMap,
    mus: typing.Sequence[UnitScalar],
    samples: typing.Sequence[AlgebraElement],
    tolerance: float,
) -> CheckReport:
    """
    Check D(mu x) = mu D(x) for unit scalars mu.

    Homogeneity over the unit circle together with additivity is the
    complex-linearity established for the corrected map.

    :param D: The map.
    :param mus: Unit scalars, usually ``sample_unit_scalars(K)``.
    :param samples: Non-empty sample cloud.
    :param tolerance: Largest admissible defect.
    :return: The report; items are ordered by mu, then sample.
    """
    validate_non_empty(mus, "mus")
    validate_non_empty(samples, "samples")
    validate_non_negative(tolerance, "tolerance")
    xs = stack_elements(samples)
    scalars = np.asarray(mus, dtype=np.complex128)[:, np.newaxis, np.newaxis, np.newaxis]
    scaled = (scalars * xs).reshape(-1, *xs.shape[1:])
    expected = (scalars * D.map_many(xs)).reshape(scaled.shape)
    values = op_norms(D.map_many(scaled) - expected)
    points = [(mu, x) for mu in mus for x in samples]
    return _max_check("homogeneity", values, tolerance, points)


def check_njordan(
    D: AlgebraMap, n: int, samples: typing.Sequence[AlgebraElement], tolerance: float
) -> CheckReport:
    """
    Check the n-Jordan identity D(a^n) = sum a^i D(a) a^(n-1-i).

    :param D: The map.
    :param n: Order, at least 2.
    :param samples: Non-empty sample cloud.
    :param tolerance: Largest admissible defect.
    :return: The report.
    :raises InvalidInputError: If n < 2.

    Example:
        ```python
        report = check_njordan(identity_map(2), 2, [identity(2)], 1e-9)
        print(report.passed, report.max_violation)  # False 1.0
        ```
    """
    validate_min_int(n, 2, "n")
    validate_non_empty(samples, "samples")
    validate_non_negative(tolerance, "tolerance")
    values = op_norms(njordan_expressions(D, stack_elements(samples), n))
    return _max_check("njordan", values, tolerance, [(a,) for a in samples])


def check_leibniz(
    D: AlgebraMap, sample_pairs: typing.Sequence[ElementPair], tolerance: float
) -> CheckReport:
    """
    Check the Leibniz rule D(ab) = D(a) b + a D(b) on sample pairs.

    :param D: The map.
    :param sample_pairs: Non-empty sequence of (a, b).
    :param tolerance: Largest admissible defect.
    :return: The report.
    """
    validate_non_empty(sample_pairs, "sample_pairs")
    validate_non_negative(tolerance, "tolerance")
    a_s = stack_elements(a for a, _ in sample_pairs)
    bs = stack_elements(b for _, b in sample_pairs)
    values = op_norms(D.map_many(a_s @ bs) - D.map_many(a_s) @ bs - a_s @ D.map_many(bs))
    return _max_check("leibniz", values, tolerance, sample_pairs)


def check_star(
    D: AlgebraMap, samples: typing.Sequence[AlgebraElement], tolerance: float
) -> CheckReport:
    """
    Check D(w*) = D(w)* on samples.

    :param D: The map.
    :param samples: Non-empty sample cloud.
    :param tolerance: Largest admissible defect.
    :return: The report.
    """
    validate_non_empty(samples, "samples")
    validate_non_negative(tolerance, "tolerance")
    values = op_norms(star_expressions(D, stack_elements(samples)))
    return _max_check("star", values, tolerance, [(w,) for w in samples])


def check_odd(
    f: AlgebraMap, samples: typing.Sequence[AlgebraElement], tolerance: float
) -> CheckReport:
    """Check f(-x) = -f(x) on samples."""
    validate_non_empty(samples, "samples")
    validate_non_negative(tolerance, "tolerance")
    xs = stack_elements(samples)
    values = op_norms(f.map_many(-xs) + f.map_many(xs))
    return _max_check("odd", values, tolerance, [(x,) for x in samples])
