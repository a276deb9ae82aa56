"""Fixed-point correction of approximate derivations.

The operator J(h)(x) = h(2x) / 2 is a strict contraction for the generalized
metric built on a control function with constant L. Its fixed point near f is
the limit D(x) = lim f(2^m x) / 2^m, computed here pointwise with a residual
trail so the geometric rate L can be read off.
"""

import logging
import math
import typing
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from jordan_stability.constants import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    MAX_SCALING_EXPONENT,
    RATE_MIN_TAIL,
)
from jordan_stability.core.algebra import AlgebraElement, _frozen, op_norm, op_norms
from jordan_stability.core.maps import AlgebraMap
from jordan_stability.exceptions import (
    InsufficientDataError,
    InvalidInputError,
    IterateOverflowError,
)
from jordan_stability.validation import validate_min_int, validate_non_empty, validate_positive

logger = logging.getLogger(__name__)


class DilatedMap(AlgebraMap):
    """The map J(h): x -> h(2x) / 2."""

    kind = "J-image"

    def __init__(self, inner: AlgebraMap) -> None:
        self.inner = inner
        super().__init__(inner.dim)

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        return self.inner.map_many(2.0 * xs, check_finite=False) / 2.0

    def describe(self) -> str:
        return f"J({self.inner.describe()})"


def apply_j(h: AlgebraMap) -> DilatedMap:
    """
    Apply the contraction operator J to a map.

    Formula:
        J(h)(x) = h(2x) / 2

    Linear maps are fixed points of J.

    :param h: Any map.
    :return: The map J(h).
    """
    return DilatedMap(h)


@dataclass(frozen=True, eq=False)
class PointDiagnostics:
    """
    Correction record of a single point.

    ``residuals[m]`` is ||f(2^(m+1) x) / 2^(m+1) - f(2^m x) / 2^m||.
    ``iterations_used`` is the index m* of the residual that met the stopping
    rule, or m_max when none did. ``final_value`` is None after an overflow.
    """

    x: AlgebraElement
    iterations_used: int
    residuals: typing.Tuple[float, ...]
    converged: bool
    final_value: typing.Optional[AlgebraElement]
    overflow_step: typing.Optional[int] = None


@dataclass(frozen=True, eq=False)
class CorrectionDiagnostics:
    """Per-point correction records of a cloud, in sample order."""

    points: typing.Tuple[PointDiagnostics, ...]
    tolerance: float
    m_max: int
    estimated_rate: typing.Optional[float] = field(default=None)

    @property
    def median_iterations(self) -> float:
        return float(np.median([p.iterations_used for p in self.points]))

    @property
    def non_converged_count(self) -> int:
        return sum(1 for p in self.points if not p.converged)

    @property
    def overflow_count(self) -> int:
        return sum(1 for p in self.points if p.overflow_step is not None)


def _validate_budget(tolerance: float, m_max: int) -> None:
    validate_positive(tolerance, "tolerance")
    validate_min_int(m_max, 1, "m_max")
    if m_max > MAX_SCALING_EXPONENT:
        raise InvalidInputError(f"m_max must be at most {MAX_SCALING_EXPONENT}, got {m_max}")


def _scale_floors(norms: npt.NDArray[np.float64], m_max: int) -> npt.NDArray[np.int64]:
    # Smallest k with 2^k ||x|| >= 1, capped at m_max; 0 at x = 0.
    _, exponents = np.frexp(norms)
    floors = np.clip(1 - exponents, 0, m_max).astype(np.int64)
    floors[norms == 0.0] = 0
    return floors


def _rows_finite(stack: npt.NDArray[np.complex128]) -> npt.NDArray[np.bool_]:
    return np.all(np.isfinite(stack.reshape(len(stack), -1)), axis=1)


def _overflow_record(x: AlgebraElement, step: int) -> PointDiagnostics:
    return PointDiagnostics(x, step, (), False, None, step)


def _overflow_error(record: PointDiagnostics) -> IterateOverflowError:
    step = record.overflow_step or 0
    return IterateOverflowError(op_norm(record.x) * 2.0**step, step=step)


def correct_many(
    f: AlgebraMap,
    xs: typing.Sequence[AlgebraElement],
    tolerance: float = DEFAULT_TOLERANCE,
    m_max: int = DEFAULT_MAX_ITERATIONS,
) -> typing.List[PointDiagnostics]:
    """
    Approximate the corrected values D(x) = lim f(2^m x) / 2^m at many points.

    Iterates d_m = f(2^m x) / 2^m on all unfinished points at once and stops a
    point at the first m with ||d_(m+1) - d_m|| < tolerance * (1 + ||d_(m+1)||),
    keeping d_(m+1). While 2^m ||x|| < 1 the test alone does not stop a point:
    d_(m+1) must also agree with d_(k+1), k the first exponent with
    2^k ||x|| >= 1, within the same threshold. Perturbations that are constant
    near 0 give a zero first residual there without d_1 being the limit.

    A point whose iterate becomes non-finite gets a record with
    ``overflow_step`` set and no value; the other points carry on.

    :param f: The approximate map.
    :param xs: Points of matching dimension.
    :param tolerance: Relative stopping tolerance, positive.
    :param m_max: Largest scaling exponent, 1..60.
    :return: One record per point, in order.
    :raises InvalidInputError: If tolerance, m_max or a point is invalid.
    """
    _validate_budget(tolerance, m_max)
    points = [_frozen(np.array(x, dtype=np.complex128)) for x in xs]
    for x in points:
        if x.shape != (f.dim, f.dim):
            raise InvalidInputError(f"x must have shape ({f.dim}, {f.dim}), got {x.shape}")
    if not points:
        return []
    stack = np.stack(points)
    floors = _scale_floors(op_norms(stack), m_max)
    records: typing.List[typing.Optional[PointDiagnostics]] = [None] * len(points)
    trails: typing.List[typing.List[float]] = [[] for _ in points]

    current = np.array(f.map_many(stack, check_finite=False))
    finite = _rows_finite(current)
    for i in np.flatnonzero(~finite):
        records[i] = _overflow_record(points[i], 0)
    active = np.flatnonzero(finite)

    settled = np.full(stack.shape, np.nan, dtype=np.complex128)
    early = active[floors[active] > 0]
    if early.size:
        scales = 2.0 ** (floors[early] + 1)[:, np.newaxis, np.newaxis]
        settled[early] = f.map_many(stack[early] * scales, check_finite=False) / scales
    settled_ok = _rows_finite(settled)

    for m in range(m_max):
        if active.size == 0:
            break
        scale = 2.0 ** (m + 1)
        candidate = f.map_many(stack[active] * scale, check_finite=False) / scale
        finite = _rows_finite(candidate)
        for i in active[~finite]:
            records[i] = _overflow_record(points[i], m + 1)
        active, candidate = active[finite], candidate[finite]

        residuals = op_norms(candidate - current[active])
        thresholds = tolerance * (1.0 + op_norms(candidate))
        accept = residuals < thresholds
        pending = np.flatnonzero(accept & (m < floors[active]))
        if pending.size:
            rows = active[pending]
            gaps = np.full(pending.size, np.inf)
            ok = settled_ok[rows]
            gaps[ok] = op_norms(candidate[pending[ok]] - settled[rows[ok]])
            accept[pending] = gaps < thresholds[pending]

        current[active] = candidate
        for j, i in enumerate(active):
            trails[i].append(float(residuals[j]))
            if accept[j]:
                value = _frozen(candidate[j].copy())
                records[i] = PointDiagnostics(points[i], m, tuple(trails[i]), True, value)
        active = active[~accept]

    for i in active:
        logger.debug(
            "no convergence within m_max=%d (last residual %.3g)", m_max, trails[i][-1]
        )
        value = _frozen(current[i].copy())
        records[i] = PointDiagnostics(points[i], m_max, tuple(trails[i]), False, value)
    return [record for record in records if record is not None]


def correct(
    f: AlgebraMap,
    x: AlgebraElement,
    tolerance: float = DEFAULT_TOLERANCE,
    m_max: int = DEFAULT_MAX_ITERATIONS,
) -> typing.Tuple[AlgebraElement, PointDiagnostics]:
    """
    Approximate the corrected value D(x) = lim f(2^m x) / 2^m.

    Iterates d_m = f(2^m x) / 2^m and stops at the first m with
    ||d_(m+1) - d_m|| < tolerance * (1 + ||d_(m+1)||), returning d_(m+1).
    When m_max residuals fail the test, d_(m_max) is returned and the point is
    flagged as not converged. See ``correct_many`` for the rule at points of
    norm below 1.

    :param f: The approximate map.
    :param x: The point.
    :param tolerance: Relative stopping tolerance, positive.
    :param m_max: Largest scaling exponent, 1..60.
    :return: The corrected value and the point's diagnostics.
    :raises InvalidInputError: If tolerance or m_max is invalid.
    :raises IterateOverflowError: If an iterate is not finite; ``step`` names m.

    Example:
        ```python
        value, record = correct(f, x, tolerance=1e-10)
        print(record.converged, record.iterations_used)
        ```

    References:
        - Hyers, D. H. (1941). On the stability of the linear functional equation.
    """
    record = correct_many(f, [x], tolerance, m_max)[0]
    if record.final_value is None:
        raise _overflow_error(record)
    return record.final_value, record


class CorrectedMap(AlgebraMap):
    """
    The corrected-limit map x -> lim f(2^m x) / 2^m.

    Values are memoized on the exact bytes of x, so repeated evaluations at
    the same point are bit-identical.
    """

    kind = "corrected-limit"

    def __init__(self, source: AlgebraMap, tolerance: float, m_max: int) -> None:
        _validate_budget(tolerance, m_max)
        self.source = source
        self.tolerance = tolerance
        self.m_max = m_max
        self._memo: typing.Dict[bytes, PointDiagnostics] = {}
        super().__init__(source.dim)

    def _apply_many(self, xs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        values = []
        for record in self.diagnostics_many(xs):
            if record.final_value is None:
                raise _overflow_error(record)
            values.append(record.final_value)
        return np.stack(values)

    def diagnostics_many(
        self, xs: typing.Iterable[AlgebraElement]
    ) -> typing.List[PointDiagnostics]:
        """Correction records of many points; points not seen before are corrected together."""
        arrays = [np.ascontiguousarray(x, dtype=np.complex128) for x in xs]
        keys = [arr.tobytes() for arr in arrays]
        missing: typing.Dict[bytes, npt.NDArray[np.complex128]] = {}
        for key, arr in zip(keys, arrays):
            if key not in self._memo:
                missing.setdefault(key, arr)
        if missing:
            records = correct_many(self.source, list(missing.values()), self.tolerance, self.m_max)
            for key, record in zip(missing, records):
                self._memo.setdefault(key, record)
        return [self._memo[key] for key in keys]

    def diagnostics(self, x: AlgebraElement) -> PointDiagnostics:
        """Correction record of x, computed once."""
        record = self.diagnostics_many([x])[0]
        if record.final_value is None:
            raise _overflow_error(record)
        return record

    def describe(self) -> str:
        return f"corrected({self.source.describe()}, tol={self.tolerance:g}, m_max={self.m_max})"


def corrected_map(
    f: AlgebraMap,
    tolerance: float = DEFAULT_TOLERANCE,
    m_max: int = DEFAULT_MAX_ITERATIONS,
) -> CorrectedMap:
    """
    Build the corrected map D of an approximate derivation f.

    :param f: The approximate map.
    :param tolerance: Stopping tolerance passed to ``correct``.
    :param m_max: Largest scaling exponent passed to ``correct``.
    :return: The memoizing corrected-limit map.
    """
    return CorrectedMap(f, tolerance, m_max)


def correct_cloud(
    f: typing.Union[AlgebraMap, CorrectedMap],
    samples: typing.Sequence[AlgebraElement],
    tolerance: float = DEFAULT_TOLERANCE,
    m_max: int = DEFAULT_MAX_ITERATIONS,
) -> CorrectionDiagnostics:
    """
    Correct a map on every point of a cloud.

    An overflow at one point is recorded in its diagnostics and the remaining
    points are still corrected.

    :param f: The approximate map, or a corrected map whose memo is reused.
    :param samples: Non-empty cloud.
    :param tolerance: Stopping tolerance.
    :param m_max: Largest scaling exponent.
    :return: Diagnostics in sample order with the median rate estimate.
    """
    validate_non_empty(samples, "samples")
    target = f if isinstance(f, CorrectedMap) else CorrectedMap(f, tolerance, m_max)
    points = target.diagnostics_many(samples)
    for record in points:
        if record.overflow_step is not None:
            logger.warning("overflow while correcting: %s", _overflow_error(record))
    diagnostics = CorrectionDiagnostics(tuple(points), target.tolerance, target.m_max)
    try:
        rate: typing.Optional[float] = rate_estimate(diagnostics)
    except InsufficientDataError:
        rate = None
    diagnostics = CorrectionDiagnostics(diagnostics.points, target.tolerance, target.m_max, rate)
    if diagnostics.non_converged_count:
        logger.warning(
            "%d of %d points did not converge", diagnostics.non_converged_count, len(points)
        )
    return diagnostics


def _point_rate(record: PointDiagnostics) -> float:
    residuals = record.residuals
    if residuals and residuals[-1] == 0.0:
        return 0.0
    if len(residuals) < RATE_MIN_TAIL:
        raise InsufficientDataError(
            f"rate estimation needs at least {RATE_MIN_TAIL} residuals, got {len(residuals)}"
        )
    start = len(residuals)
    while start > 0 and residuals[start - 1] > 0.0:
        start -= 1
    tail = max(RATE_MIN_TAIL, math.ceil(record.iterations_used / 2))
    tail = min(tail, len(residuals) - start - 1)
    if tail < 1:
        raise InsufficientDataError("rate estimation needs two successive non-zero residuals")
    first, last = residuals[-1 - tail], residuals[-1]
    return float((last / first) ** (1.0 / tail))


def rate_estimate(diagnostics: typing.Union[PointDiagnostics, CorrectionDiagnostics]) -> float:
    """
    Estimate the contraction rate from residual trails.

    For one point this is the geometric-mean ratio of successive residuals over
    the last max(4, ceil(m*/2)) steps, and 0 when the trail ends on an exact 0.
    The window never reaches back past a zero residual. For a cloud it is the
    median over the points whose rate can be estimated.

    Formula:
        rate = (r_last / r_(last - k)) ** (1 / k),  k = max(4, ceil(m*/2))

    :param diagnostics: Point or cloud diagnostics.
    :return: The estimated rate.
    :raises InsufficientDataError: If fewer than 4 residuals are available
        (for a cloud: at no point).
    """
    if isinstance(diagnostics, PointDiagnostics):
        return _point_rate(diagnostics)
    rates = []
    for record in diagnostics.points:
        try:
            rates.append(_point_rate(record))
        except InsufficientDataError:
            continue
    if not rates:
        raise InsufficientDataError("no point has enough residuals for a rate estimate")
    return float(np.median(rates))
