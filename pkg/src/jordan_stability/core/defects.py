"""Defect functionals of approximate (star) n-Jordan derivations.

The combined defect of f at (mu, x, y, a[, w]) is the norm of

    mu f((x+y)/2) + mu f((x-y)/2) - f(mu x)
    + f(a^n) - [f(a) a^(n-1) + a f(a) a^(n-2) + ... + a^(n-1) f(a)]
    [+ f(w*) - f(w)*]

The n-Jordan part subtracts the whole sum, as in the definition of an
n-Jordan derivation.
"""

import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from jordan_stability.constants import NUMERATOR_FLOOR, ZERO_FLOOR
from jordan_stability.core.algebra import (
    AlgebraElement,
    SampleSpec,
    UnitScalar,
    involution,
    op_norm,
    op_norms,
    power,
    sample_elements,
    sample_unit_scalars,
    stack_elements,
)
from jordan_stability.core.control import Anchor, ControlFunction, phi_eval_many
from jordan_stability.core.maps import AlgebraMap
from jordan_stability.exceptions import DegenerateCloudError, InvalidInputError
from jordan_stability.validation import validate_min_int, validate_non_empty

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DefectArguments:
    """One argument tuple (mu, x, y, a[, w]) of the defect functionals."""

    mu: UnitScalar
    x: AlgebraElement
    y: AlgebraElement
    a: AlgebraElement
    w: typing.Optional[AlgebraElement] = None

    def control_arguments(self) -> typing.Tuple[AlgebraElement, ...]:
        """The arguments phi is evaluated at."""
        if self.w is None:
            return (self.x, self.y, self.a)
        return (self.x, self.y, self.a, self.w)


@dataclass(frozen=True, eq=False)
class DefectSample:
    """Individual and combined defects at one argument tuple."""

    arguments: DefectArguments
    jensen: float
    njordan: float
    star: typing.Optional[float]
    combined: float


def jensen_expression(
    f: AlgebraMap, mu: UnitScalar, x: AlgebraElement, y: AlgebraElement
) -> npt.NDArray[np.complex128]:
    """Return mu f((x+y)/2) + mu f((x-y)/2) - f(mu x)."""
    return mu * f((x + y) / 2.0) + mu * f((x - y) / 2.0) - f(mu * x)


def jensen_defect(f: AlgebraMap, mu: UnitScalar, x: AlgebraElement, y: AlgebraElement) -> float:
    """
    Calculate the Jensen-type defect of a map.

    Formula:
        ||mu f((x+y)/2) + mu f((x-y)/2) - f(mu x)||

    Complex-linear maps have defect 0 for every mu, x, y.

    :param f: The map.
    :param mu: Unit scalar.
    :param x: First argument.
    :param y: Second argument.
    :return: The defect, non-negative.
    """
    return op_norm(jensen_expression(f, mu, x, y))


def njordan_sum(f: AlgebraMap, a: AlgebraElement, n: int) -> npt.NDArray[np.complex128]:
    """
    Calculate the n-Jordan sum of a map at a.

    Formula:
        sum over i = 0..n-1 of a^i f(a) a^(n-1-i)

    :param f: The map.
    :param a: The element.
    :param n: Order, at least 2.
    :return: The sum as a matrix.
    :raises InvalidInputError: If n < 2.
    """
    validate_min_int(n, 2, "n")
    fa = f(a)
    powers = [np.eye(a.shape[0], dtype=np.complex128)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ a)
    total = np.zeros_like(fa)
    for i in range(n):
        total = total + powers[i] @ fa @ powers[n - 1 - i]
    return total


def njordan_expression(f: AlgebraMap, a: AlgebraElement, n: int) -> npt.NDArray[np.complex128]:
    """Return f(a^n) - njordan_sum(f, a, n)."""
    validate_min_int(n, 2, "n")
    return f(power(a, n)) - njordan_sum(f, a, n)


def njordan_defect(f: AlgebraMap, a: AlgebraElement, n: int) -> float:
    """
    Calculate the n-Jordan defect of a map.

    Formula:
        ||f(a^n) - (f(a) a^(n-1) + a f(a) a^(n-2) + ... + a^(n-1) f(a))||

    :param f: The map.
    :param a: The element.
    :param n: Order, at least 2.
    :return: The defect, non-negative.
    :raises InvalidInputError: If n < 2.
    """
    return op_norm(njordan_expression(f, a, n))


def star_expression(f: AlgebraMap, w: AlgebraElement) -> npt.NDArray[np.complex128]:
    """Return f(w*) - f(w)*."""
    return f(involution(w)) - involution(f(w))


def star_defect(f: AlgebraMap, w: AlgebraElement) -> float:
    """
    Calculate how far a map is from preserving the involution.

    Formula:
        ||f(w*) - f(w)*||

    :param f: The map.
    :param w: The element.
    :return: The defect, non-negative.
    """
    return op_norm(star_expression(f, w))


def combined_defect(
    f: AlgebraMap,
    mu: UnitScalar,
    x: AlgebraElement,
    y: AlgebraElement,
    a: AlgebraElement,
    w: typing.Optional[AlgebraElement] = None,
    n: int = 2,
) -> float:
    """
    Calculate the combined defect bounded by phi in the stability hypothesis.

    Formula:
        ||JensenExpr(mu, x, y) + (f(a^n) - njordan_sum(f, a, n)) [+ f(w*) - f(w)*]||

    :param f: The map.
    :param mu: Unit scalar.
    :param x: First Jensen argument.
    :param y: Second Jensen argument.
    :param a: n-Jordan argument.
    :param w: Star argument; the star term is included iff w is given.
    :param n: Order, at least 2.
    :return: The combined defect, non-negative.
    """
    total = jensen_expression(f, mu, x, y) + njordan_expression(f, a, n)
    if w is not None:
        total = total + star_expression(f, w)
    return op_norm(total)


def defect_sample(f: AlgebraMap, arguments: DefectArguments, n: int) -> DefectSample:
    """Evaluate every defect of f at one argument tuple."""
    jensen = jensen_expression(f, arguments.mu, arguments.x, arguments.y)
    jordan = njordan_expression(f, arguments.a, n)
    total = jensen + jordan
    star: typing.Optional[float] = None
    if arguments.w is not None:
        star_term = star_expression(f, arguments.w)
        star = op_norm(star_term)
        total = total + star_term
    return DefectSample(arguments, op_norm(jensen), op_norm(jordan), star, op_norm(total))


def _adjoints(stack: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    return np.conj(stack).transpose(0, 2, 1)


def njordan_expressions(
    f: AlgebraMap, a_s: npt.NDArray[np.complex128], n: int
) -> npt.NDArray[np.complex128]:
    """Return f(a^n) - njordan_sum(f, a, n) for every a of an (N, k, k) stack."""
    validate_min_int(n, 2, "n")
    fa = f.map_many(a_s)
    powers = [np.broadcast_to(np.eye(f.dim, dtype=np.complex128), a_s.shape)]
    for _ in range(n):
        powers.append(powers[-1] @ a_s)
    total = np.zeros_like(fa)
    for i in range(n):
        total = total + powers[i] @ fa @ powers[n - 1 - i]
    return f.map_many(powers[n]) - total


def star_expressions(f: AlgebraMap, ws: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """Return f(w*) - f(w)* for every w of an (N, k, k) stack."""
    return f.map_many(_adjoints(ws)) - _adjoints(f.map_many(ws))


def defect_arrays(
    f: AlgebraMap, tuples: typing.Sequence[DefectArguments], n: int
) -> typing.Tuple[
    npt.NDArray[np.float64],
    npt.NDArray[np.float64],
    typing.Optional[npt.NDArray[np.float64]],
    npt.NDArray[np.float64],
]:
    """
    Evaluate every defect of f on many argument tuples with one map call per term.

    :param f: The map.
    :param tuples: Non-empty argument tuples, all with or all without w.
    :param n: Order, at least 2.
    :return: (jensen, njordan, star, combined) with one value per tuple; star is
        None when the tuples carry no star argument.
    :raises InvalidInputError: If n < 2 or only some tuples carry w.
    """
    validate_min_int(n, 2, "n")
    validate_non_empty(tuples, "tuples")
    star = tuples[0].w is not None
    if any((t.w is not None) != star for t in tuples):
        raise InvalidInputError("argument tuples mix star and non-star arguments")
    mus = np.array([t.mu for t in tuples], dtype=np.complex128)[:, np.newaxis, np.newaxis]
    xs = stack_elements(t.x for t in tuples)
    ys = stack_elements(t.y for t in tuples)
    a_s = stack_elements(t.a for t in tuples)

    jensen = (
        mus * f.map_many((xs + ys) / 2.0)
        + mus * f.map_many((xs - ys) / 2.0)
        - f.map_many(mus * xs)
    )
    jordan = njordan_expressions(f, a_s, n)
    total = jensen + jordan

    star_norms: typing.Optional[npt.NDArray[np.float64]] = None
    if star:
        ws = stack_elements(typing.cast(AlgebraElement, t.w) for t in tuples)
        star_term = star_expressions(f, ws)
        star_norms = op_norms(star_term)
        total = total + star_term
    return op_norms(jensen), op_norms(jordan), star_norms, op_norms(total)


def defect_samples(
    f: AlgebraMap, tuples: typing.Sequence[DefectArguments], n: int
) -> typing.List[DefectSample]:
    """Evaluate every defect of f on many argument tuples, as ``defect_sample`` does per tuple."""
    jensen, jordan, star, combined = defect_arrays(f, tuples, n)
    return [
        DefectSample(
            arguments,
            float(jensen[i]),
            float(jordan[i]),
            None if star is None else float(star[i]),
            float(combined[i]),
        )
        for i, arguments in enumerate(tuples)
    ]


def control_values(
    phi: ControlFunction, tuples: typing.Sequence[DefectArguments]
) -> npt.NDArray[np.float64]:
    """Evaluate phi at the control arguments of every tuple."""
    validate_non_empty(tuples, "tuples")
    columns = zip(*(t.control_arguments() for t in tuples))
    return phi_eval_many(phi, *(stack_elements(column) for column in columns))


def argument_tuples(
    samples: typing.Sequence[AlgebraElement],
    mus: typing.Sequence[UnitScalar],
    arity: int,
    anchor: Anchor = Anchor.X00,
) -> typing.List[DefectArguments]:
    """
    Build the argument tuples a cloud contributes to theta fitting.

    For every unit scalar mu the tuples are the zero tuple and, per sample
    s_i, the anchor slice (s_i, 0, 0) or (s_i, 3 s_i, 0), the homogeneity slice
    (s_i, s_i, 0), the n-Jordan slice (0, 0, s_i), the star slice (0, 0, 0, s_i)
    when arity is 4, and the mixed tuple (s_i, s_i+1, s_i+2[, s_i+3]) when
    those samples exist. A prefix of a cloud yields a subset of the tuples of
    the whole cloud.

    :param samples: Non-empty sample cloud.
    :param mus: Unit scalars.
    :param arity: 3 or 4.
    :param anchor: Anchor of the theorem being instantiated.
    :return: The tuples, ordered by mu, then sample index.
    """
    validate_non_empty(samples, "samples")
    validate_non_empty(mus, "mus")
    origin = np.zeros_like(samples[0])
    star = arity == 4
    w0 = origin if star else None
    tuples: typing.List[DefectArguments] = []
    for mu in mus:
        tuples.append(DefectArguments(mu, origin, origin, origin, w0))
        for i, s in enumerate(samples):
            y = origin if anchor is Anchor.X00 else 3.0 * s
            tuples.append(DefectArguments(mu, s, y, origin, w0))
            tuples.append(DefectArguments(mu, s, s, origin, w0))
            tuples.append(DefectArguments(mu, origin, origin, s, w0))
            if star:
                tuples.append(DefectArguments(mu, origin, origin, origin, s))
            last = i + (3 if star else 2)
            if last < len(samples):
                w = samples[i + 3] if star else None
                tuples.append(DefectArguments(mu, s, samples[i + 1], samples[i + 2], w))
    return tuples


@dataclass(frozen=True, eq=False)
class ThetaFit:
    """
    Empirical control constant of a map on a cloud.

    ``theta_hat`` is the largest ratio combined_defect / phi_1 over the tuples,
    where phi_1 is the control shape with theta = 1; it is ``math.inf`` when a
    tuple with phi_1 = 0 has a non-zero defect.
    """

    theta_hat: float
    shape: ControlFunction
    cloud: SampleSpec
    max_ratio_point: typing.Optional[DefectArguments]
    tuples_used: int
    tuples_skipped: int

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.theta_hat)

    def control(self) -> ControlFunction:
        """The control shape scaled by theta_hat."""
        return self.shape.with_theta(self.theta_hat)


def fit_theta_on(
    f: AlgebraMap,
    shape: ControlFunction,
    tuples: typing.Sequence[DefectArguments],
    n: int,
) -> typing.Tuple[float, typing.Optional[DefectArguments], int, int]:
    """
    Fit theta on explicit argument tuples.

    :return: (theta_hat, max_ratio_point, tuples_used, tuples_skipped).
    :raises DegenerateCloudError: If every tuple has phi_1 = 0 and zero defect.
    """
    if not tuples:
        raise DegenerateCloudError("no argument tuples to fit theta on")
    _, _, _, numerators = defect_arrays(f, tuples, n)
    denominators = control_values(shape.with_theta(1.0), tuples)
    vanishing = denominators < ZERO_FLOOR
    infinite = vanishing & (numerators > NUMERATOR_FLOOR)
    if np.any(infinite):
        index = int(np.argmax(infinite))
        logger.warning(
            "defect %.6g where the control vanishes: theta is infinite", numerators[index]
        )
        used = int(np.count_nonzero(~vanishing[:index])) + 1
        return math.inf, tuples[index], used, int(np.count_nonzero(vanishing[:index]))
    usable = np.flatnonzero(~vanishing)
    if usable.size == 0:
        raise DegenerateCloudError(f"all {len(tuples)} argument tuples have a vanishing control")
    ratios = numerators[usable] / denominators[usable]
    best = int(np.argmax(ratios))
    used = int(usable.size)
    return float(ratios[best]), tuples[usable[best]], used, len(tuples) - used


def fit_theta(
    f: AlgebraMap,
    shape: ControlFunction,
    cloud: SampleSpec,
    mu_count: int,
    n: int,
    anchor: Anchor = Anchor.X00,
) -> ThetaFit:
    """
    Fit the control constant theta of a map on a seeded cloud.

    Formula:
        theta_hat = max over tuples of combined_defect / phi_1(x, y, a[, w])

    :param f: The map.
    :param shape: Control shape; its theta is ignored. Its arity decides whether
        star arguments are sampled.
    :param cloud: Sample cloud description.
    :param mu_count: Number K of roots of unity used for mu.
    :param n: Order of the n-Jordan term, at least 2.
    :param anchor: Anchor slice to include, (x,0,0) or (x,3x,0).
    :return: The fit.
    :raises DegenerateCloudError: If every tuple had to be skipped.

    Example:
        ```python
        fit = fit_theta(f, power_sum(1.0, 0.5), SampleSpec(2, 50, 2.0, seed=1), 8, 2)
        print(fit.theta_hat)
        ```
    """
    validate_min_int(n, 2, "n")
    samples = sample_elements(cloud)
    mus = sample_unit_scalars(mu_count)
    tuples = argument_tuples(samples, mus, shape.arity, Anchor(anchor))
    theta_hat, best, used, skipped = fit_theta_on(f, shape, tuples, n)
    logger.debug(
        "fitted theta_hat=%.6g for %s on %d tuples (%d skipped)",
        theta_hat,
        shape.describe(),
        used,
        skipped,
    )
    return ThetaFit(theta_hat, shape.with_theta(1.0), cloud, best, used, skipped)
