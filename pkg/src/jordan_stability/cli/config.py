"""
Scenario configuration.

Scenario files are TOML documents written as flat ``key.path = value`` lines.
Matrix literals are row-major lists of rows whose entries are either numbers or
``[re, im]`` pairs:

    variant = "cor23"
    n = 2
    seed = 7
    algebra.dim = 2
    derivation.b = [[[0.0, 0.25], [0.1, 0.0]], [[0.0, 0.0], [0.0, -0.25]]]
    perturbation.shape = "power"
    perturbation.theta = 0.1
    control.exponent = 0.5
    cloud.count = 200
    cloud.radius = 2.0
"""

import logging
import math
import sys
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from jordan_stability.constants import DEFAULT_MAX_ITERATIONS, DEFAULT_MU_GRID, DEFAULT_TOLERANCE
from jordan_stability.core.algebra import (
    DISTRIBUTIONS,
    AlgebraElement,
    SampleSpec,
    element,
    identity,
    is_skew_adjoint,
    random_element,
)
from jordan_stability.core.control import (
    Anchor,
    ControlFunction,
    power_sum,
    power_sum_star,
    product_power,
    product_power_star,
)
from jordan_stability.core.maps import PERTURBATION_SHAPES, PerturbationSpec
from jordan_stability.core.verify import ODD_VARIANTS, STAR_VARIANTS, VARIANTS, BoundSpec
from jordan_stability.exceptions import ConfigError, InvalidInputError, MalformedElementError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

CHECK_NAMES = (
    "bound",
    "additivity",
    "homogeneity",
    "njordan",
    "leibniz",
    "star",
    "odd",
    "scaling",
)
B_TAGS = ("random", "random-hermitian")
DIRECTION_TAGS = ("identity", "random-hermitian", "random")

# Seed offsets of the generators drawing b and E from the scenario seed
B_SEED_OFFSET = 1
DIRECTION_SEED_OFFSET = 2

_DEFAULT_SHAPES = {
    "thm21": "power-sum",
    "cor23": "power-sum",
    "thm22": "power-sum-star",
    "cor24": "power-sum-star",
    "thm25": "product-power",
    "cor26": "product-power",
    "thm27": "product-power-star",
    "cor28": "product-power-star",
    "cor210": "product-power-star",
}

_CONTROL_BUILDERS: typing.Dict[str, typing.Callable[[float, float], ControlFunction]] = {
    "power-sum": power_sum,
    "power-sum-star": power_sum_star,
    "product-power": product_power,
    "product-power-star": product_power_star,
}

KNOWN_KEYS = (
    "variant",
    "n",
    "seed",
    "mu_grid",
    "checks",
    "algebra.dim",
    "derivation.kind",
    "derivation.b",
    "derivation.skew_adjoint",
    "derivation.scale",
    "perturbation.shape",
    "perturbation.theta",
    "perturbation.exponent",
    "perturbation.direction",
    "perturbation.star_compatible",
    "perturbation.oddify",
    "control.shape",
    "control.exponent",
    "control.theta",
    "cloud.count",
    "cloud.radius",
    "cloud.distribution",
    "cloud.seed",
    "corrector.tolerance",
    "corrector.m_max",
)

MatrixSource = typing.Union[str, AlgebraElement]


@dataclass(frozen=True, eq=False)
class DerivationConfig:
    """The exact inner derivation D_b of a scenario."""

    b: MatrixSource = "random"
    skew_adjoint: bool = False
    scale: float = 0.5


@dataclass(frozen=True, eq=False)
class PerturbationConfig:
    """The perturbation added to D_b; shape ``none`` leaves D_b unchanged."""

    shape: str = "none"
    theta: float = 0.0
    exponent: float = 1.0
    direction: MatrixSource = "identity"
    star_compatible: bool = False
    oddify: bool = False


@dataclass(frozen=True)
class ControlConfig:
    """Control shape; ``theta`` is fitted on the cloud when None."""

    shape: str
    exponent: float
    theta: typing.Optional[float] = None


@dataclass(frozen=True)
class CorrectorConfig:
    tolerance: float = DEFAULT_TOLERANCE
    m_max: int = DEFAULT_MAX_ITERATIONS


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """
    A fully validated scenario.

    ``source`` keeps the flat key/value mapping the scenario was parsed from;
    reports echo it.
    """

    variant: str
    n: int
    seed: int
    dim: int
    derivation: DerivationConfig
    perturbation: PerturbationConfig
    control: ControlConfig
    cloud: SampleSpec
    mu_grid: int
    corrector: CorrectorConfig
    checks: typing.Tuple[str, ...]
    source: typing.Dict[str, typing.Any] = field(default_factory=dict)

    @property
    def anchor(self) -> Anchor:
        return Anchor.X3X0 if self.variant in ODD_VARIANTS else Anchor.X00

    @property
    def is_star(self) -> bool:
        return self.variant in STAR_VARIANTS

    def control_shape(self) -> ControlFunction:
        """The control shape with theta = 1."""
        return _CONTROL_BUILDERS[self.control.shape](1.0, self.control.exponent)

    def bound_spec(self, theta: float) -> BoundSpec:
        """The ``BoundSpec`` for a given theta."""
        return BoundSpec(self.variant, self.control_shape().with_theta(theta))

    def structure_tolerance(self, factor: float) -> float:
        """Tolerance of structure checks: factor * tolerance * (1 + radius)^n."""
        return factor * self.corrector.tolerance * (1.0 + self.cloud.radius) ** self.n

    def derivation_generator(self) -> AlgebraElement:
        """The generator b of the exact derivation."""
        b = self.derivation.b
        if not isinstance(b, str):
            return b
        rng = np.random.default_rng(self.seed + B_SEED_OFFSET)
        if b == "random-hermitian":
            return random_element(rng, self.dim, "hermitian", self.derivation.scale)
        kind = "skew" if self.derivation.skew_adjoint else "dense"
        return random_element(rng, self.dim, kind, self.derivation.scale)

    def perturbation_spec(self) -> typing.Optional[PerturbationSpec]:
        """The perturbation, or None for shape ``none``."""
        p = self.perturbation
        if p.shape == "none":
            return None
        direction = p.direction
        if isinstance(direction, str):
            if direction == "identity":
                direction = identity(self.dim)
            else:
                rng = np.random.default_rng(self.seed + DIRECTION_SEED_OFFSET)
                kind = "hermitian" if direction == "random-hermitian" else "dense"
                direction = random_element(rng, self.dim, kind, 1.0)
        try:
            return PerturbationSpec(p.shape, direction, p.theta, p.exponent, p.star_compatible)
        except ConfigError as exc:
            raise ConfigError(exc.message, field=f"perturbation.{exc.field}") from exc


def flatten(
    mapping: typing.Mapping[str, typing.Any], prefix: str = ""
) -> typing.Dict[str, typing.Any]:
    """Flatten nested tables into dotted keys."""
    flat: typing.Dict[str, typing.Any] = {}
    for key, value in mapping.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, f"{path}."))
        else:
            flat[path] = value
    return flat


def _number(flat: typing.Dict[str, typing.Any], key: str, default: typing.Any = None) -> float:
    value = flat.get(key, default)
    if value is None:
        raise ConfigError("is required", field=key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"must be a finite number, got {value!r}", field=key)
    return float(value)


def _integer(
    flat: typing.Dict[str, typing.Any], key: str, default: typing.Any, minimum: int
) -> int:
    value = flat.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"must be an integer, got {value!r}", field=key)
    if value < minimum:
        raise ConfigError(f"must be at least {minimum}, got {value}", field=key)
    return value


def _boolean(flat: typing.Dict[str, typing.Any], key: str, default: bool) -> bool:
    value = flat.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"must be true or false, got {value!r}", field=key)
    return value


def _choice(
    flat: typing.Dict[str, typing.Any], key: str, default: typing.Any, choices: typing.Sequence[str]
) -> str:
    value = flat.get(key, default)
    if value not in choices:
        raise ConfigError(f"must be one of {tuple(choices)}, got {value!r}", field=key)
    return typing.cast(str, value)


def parse_matrix(value: typing.Any, key: str, dim: int) -> AlgebraElement:
    """
    Parse a matrix literal of rows of numbers or [re, im] pairs.

    :param value: The literal as read from the file.
    :param key: Dotted key, used in error messages.
    :param dim: Expected matrix size.
    :return: The element.
    :raises ConfigError: If the literal is malformed or of the wrong size.
    """
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise ConfigError("matrix literal must be a list of rows", field=key)
    rows = []
    for row in value:
        entries = []
        for entry in row:
            if isinstance(entry, list) and len(entry) == 2:
                re, im = entry
            else:
                re, im = entry, 0.0
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in (re, im)):
                raise ConfigError(
                    f"matrix entry {entry!r} is not a number or [re, im] pair", field=key
                )
            entries.append(complex(re, im))
        rows.append(entries)
    try:
        matrix = element(rows)
    except (MalformedElementError, ValueError) as exc:
        raise ConfigError(str(exc), field=key) from exc
    if matrix.shape[0] != dim:
        size = matrix.shape[0]
        raise ConfigError(f"matrix must be {dim}x{dim}, got {size}x{size}", field=key)
    return matrix


def _matrix_source(
    flat: typing.Dict[str, typing.Any], key: str, default: str, tags: typing.Sequence[str], dim: int
) -> MatrixSource:
    value = flat.get(key, default)
    if isinstance(value, str):
        if value not in tags:
            raise ConfigError(
                f"must be a matrix literal or one of {tuple(tags)}, got {value!r}", field=key
            )
        return value
    return parse_matrix(value, key, dim)


def _default_checks(variant: str, n: int) -> typing.Tuple[str, ...]:
    checks = ["bound", "additivity", "homogeneity", "njordan"]
    if variant in STAR_VARIANTS:
        checks.append("star")
    if variant in ODD_VARIANTS:
        checks.append("odd")
    if n == 2:
        checks.append("leibniz")
    return tuple(checks)


def _checks(flat: typing.Dict[str, typing.Any], variant: str, n: int) -> typing.Tuple[str, ...]:
    if "checks" not in flat:
        checks = list(_default_checks(variant, n))
    else:
        raw = flat["checks"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("must be a non-empty list of check names", field="checks")
        for name in raw:
            if name not in CHECK_NAMES:
                raise ConfigError(
                    f"unknown check {name!r}, expected one of {CHECK_NAMES}", field="checks"
                )
        checks = list(dict.fromkeys(raw))
    if variant == "cor210":
        for forced in ("star", "leibniz"):
            if forced not in checks:
                logger.warning("cor210 requires the %s check; adding it", forced)
                checks.append(forced)
    return tuple(checks)


def parse_config(
    mapping: typing.Mapping[str, typing.Any], seed: typing.Optional[int] = None
) -> ScenarioConfig:
    """
    Validate a scenario mapping.

    :param mapping: Nested or flat (dotted key) mapping, e.g. parsed TOML.
    :param seed: Overrides ``seed`` and ``cloud.seed`` when given.
    :return: The validated configuration.
    :raises ConfigError: On the first invalid or unknown key, naming its path.
    """
    flat = flatten(mapping)
    if seed is not None:
        flat["seed"] = seed
        flat.pop("cloud.seed", None)
    for key in flat:
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown configuration key", field=key)

    variant = _choice(flat, "variant", None, VARIANTS)
    n = _integer(flat, "n", 2, 2)
    if variant == "cor210" and n != 2:
        raise ConfigError(f"cor210 applies to Jordan derivations, n must be 2, got {n}", field="n")
    base_seed = _integer(flat, "seed", 0, 0)
    if base_seed >= 2**64 - DIRECTION_SEED_OFFSET:
        raise ConfigError("must be an unsigned 64-bit integer", field="seed")
    dim = _integer(flat, "algebra.dim", 2, 1)

    _choice(flat, "derivation.kind", "inner", ("inner",))
    skew = _boolean(flat, "derivation.skew_adjoint", False)
    b = _matrix_source(flat, "derivation.b", "random", B_TAGS, dim)
    if skew and not isinstance(b, str) and not is_skew_adjoint(b, atol=1e-12):
        raise ConfigError(
            "matrix is not skew-adjoint although skew_adjoint is set", field="derivation.b"
        )
    scale = _number(flat, "derivation.scale", 0.5)
    if scale < 0:
        raise ConfigError(f"must be non-negative, got {scale}", field="derivation.scale")
    derivation = DerivationConfig(b, skew, scale)

    control_shape = _choice(
        flat, "control.shape", _DEFAULT_SHAPES[variant], tuple(_CONTROL_BUILDERS)
    )
    control_exponent = _number(flat, "control.exponent")
    control_theta = flat.get("control.theta")
    if control_theta is not None:
        control_theta = _number(flat, "control.theta")
        if control_theta < 0:
            raise ConfigError(f"must be non-negative, got {control_theta}", field="control.theta")
    control = ControlConfig(control_shape, control_exponent, control_theta)
    try:
        unit_control = _CONTROL_BUILDERS[control_shape](1.0, control_exponent)
    except InvalidInputError as exc:
        raise ConfigError(str(exc), field="control.exponent") from exc
    try:
        BoundSpec(variant, unit_control)
    except InvalidInputError as exc:
        raise ConfigError(str(exc), field="control.shape") from exc

    shape = _choice(flat, "perturbation.shape", "none", ("none",) + PERTURBATION_SHAPES)
    default_exponent = control_exponent
    if control_shape.startswith("product"):
        default_exponent = 2.0 * control_exponent
    perturbation = PerturbationConfig(
        shape,
        _number(flat, "perturbation.theta", 0.0),
        _number(flat, "perturbation.exponent", default_exponent),
        _matrix_source(flat, "perturbation.direction", "identity", DIRECTION_TAGS, dim),
        _boolean(flat, "perturbation.star_compatible", False),
        _boolean(flat, "perturbation.oddify", False),
    )

    cloud_seed = _integer(flat, "cloud.seed", base_seed, 0)
    count = _integer(flat, "cloud.count", 200, 1)
    radius = _number(flat, "cloud.radius", 2.0)
    distribution = _choice(flat, "cloud.distribution", "dense-gaussian", DISTRIBUTIONS)
    try:
        cloud = SampleSpec(dim, count, radius, distribution, cloud_seed)
    except ConfigError as exc:
        raise ConfigError(exc.message, field=f"cloud.{exc.field}") from exc

    tolerance = _number(flat, "corrector.tolerance", DEFAULT_TOLERANCE)
    if tolerance <= 0:
        raise ConfigError(f"must be positive, got {tolerance}", field="corrector.tolerance")
    m_max = _integer(flat, "corrector.m_max", DEFAULT_MAX_ITERATIONS, 1)
    if m_max > DEFAULT_MAX_ITERATIONS:
        raise ConfigError(
            f"must be at most {DEFAULT_MAX_ITERATIONS}, got {m_max}", field="corrector.m_max"
        )

    config = ScenarioConfig(
        variant=variant,
        n=n,
        seed=base_seed,
        dim=dim,
        derivation=derivation,
        perturbation=perturbation,
        control=control,
        cloud=cloud,
        mu_grid=_integer(flat, "mu_grid", DEFAULT_MU_GRID, 1),
        corrector=CorrectorConfig(tolerance, m_max),
        checks=_checks(flat, variant, n),
        source=dict(sorted(flat.items())),
    )
    config.perturbation_spec()
    return config


def load_config(path: typing.Union[str, Path], seed: typing.Optional[int] = None) -> ScenarioConfig:
    """
    Read and validate a scenario file.

    :param path: Path of the TOML scenario file.
    :param seed: Optional seed override.
    :return: The validated configuration.
    :raises ConfigError: If the file cannot be read or parsed, or is invalid.

    Example:
        ```python
        config = load_config("scenarios/cor23_pass.toml")
        print(config.variant, config.cloud.count)  # cor23 200
        ```
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        mapping = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    logger.debug("loaded scenario %s", path)
    return parse_config(mapping, seed)
