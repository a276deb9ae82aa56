"""Run a scenario end to end and assemble its report."""

import logging
import math
import time
import typing
from dataclasses import asdict, dataclass, field

import numpy as np

from jordan_stability import __version__
from jordan_stability.cli.config import ScenarioConfig
from jordan_stability.constants import CHECK_TOLERANCE_FACTOR, SCALING_SLACK
from jordan_stability.core.algebra import AlgebraElement, sample_elements, sample_unit_scalars
from jordan_stability.core.control import scaling_check, scaling_tuples
from jordan_stability.core.corrector import CorrectedMap, CorrectionDiagnostics, correct_cloud
from jordan_stability.core.defects import ThetaFit, fit_theta
from jordan_stability.core.maps import AlgebraMap, inner_derivation, oddify, perturb
from jordan_stability.core.verify import (
    BoundSpec,
    CheckReport,
    bound_constant,
    check_additivity,
    check_bound,
    check_homogeneity,
    check_leibniz,
    check_njordan,
    check_odd,
    check_star,
    consecutive_pairs,
)
from jordan_stability.exceptions import CalculationError

logger = logging.getLogger(__name__)


def encode(value: typing.Any) -> typing.Any:
    """Convert complex numbers and matrices to nested lists of [re, im] pairs."""
    if isinstance(value, np.ndarray):
        return [[encode(complex(entry)) for entry in row] for row in value]
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (tuple, list)):
        return [encode(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class Report:
    """
    Outcome of one scenario run.

    All fields are plain JSON values so that ``Report.from_dict(r.to_dict())``
    equals ``r``.
    """

    version: str
    config: typing.Dict[str, typing.Any]
    theta_fit: typing.Dict[str, typing.Any]
    checks: typing.List[typing.Dict[str, typing.Any]]
    diagnostics: typing.Dict[str, typing.Any]
    certificate: typing.Optional[typing.Dict[str, typing.Any]]
    passed: bool
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self, include_wall_time: bool = True) -> typing.Dict[str, typing.Any]:
        data = asdict(self)
        if not include_wall_time:
            data.pop("wall_time")
        return data

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any]) -> "Report":
        return cls(
            version=data["version"],
            config=dict(data["config"]),
            theta_fit=dict(data["theta_fit"]),
            checks=[dict(check) for check in data["checks"]],
            diagnostics=dict(data["diagnostics"]),
            certificate=dict(data["certificate"]) if data.get("certificate") is not None else None,
            passed=bool(data["passed"]),
            wall_time=float(data.get("wall_time", 0.0)),
        )

    def check(self, name: str) -> typing.Dict[str, typing.Any]:
        """Return the check with the given name."""
        for entry in self.checks:
            if entry["name"] == name:
                return entry
        raise KeyError(name)


def check_to_dict(report: CheckReport) -> typing.Dict[str, typing.Any]:
    return {
        "name": report.name,
        "passed": report.passed,
        "max_violation": report.max_violation,
        "tolerance": report.tolerance,
        "samples_used": report.samples_used,
        "violating_index": report.violating_index,
        "violating_point": encode(report.violating_point),
        "values": list(report.values),
        "bounds": list(report.bounds) if report.bounds is not None else None,
    }


def diagnostics_summary(diagnostics: CorrectionDiagnostics) -> typing.Dict[str, typing.Any]:
    return {
        "points": len(diagnostics.points),
        "median_iterations": diagnostics.median_iterations,
        "rate_estimate": diagnostics.estimated_rate,
        "non_converged_count": diagnostics.non_converged_count,
        "overflow_count": diagnostics.overflow_count,
        "tolerance": diagnostics.tolerance,
        "m_max": diagnostics.m_max,
    }


def build_maps(config: ScenarioConfig) -> typing.Tuple[AlgebraMap, AlgebraMap]:
    """
    Build the exact derivation and the approximate map of a scenario.

    :param config: The scenario.
    :return: (D_b, f) with f = D_b + g, or its odd part when ``perturbation.oddify`` is set.
    """
    exact = inner_derivation(config.derivation_generator())
    spec = config.perturbation_spec()
    f: AlgebraMap = exact if spec is None else perturb(exact, spec)
    if config.perturbation.oddify:
        f = oddify(f)
    return exact, f


def scenario_fit(config: ScenarioConfig, f: AlgebraMap) -> ThetaFit:
    """Fit theta of f against the scenario's control shape on its cloud."""
    return fit_theta(
        f, config.control_shape(), config.cloud, config.mu_grid, config.n, config.anchor
    )


def _max_ratio(report: CheckReport) -> float:
    if report.bounds is None:
        return math.inf
    worst = 0.0
    for value, bound in zip(report.values, report.bounds):
        if bound > 0.0:
            worst = max(worst, value / bound)
        elif value > 0.0:
            return math.inf
    return worst


def _certificate(
    spec: BoundSpec, checks: typing.Sequence[CheckReport]
) -> typing.Dict[str, typing.Any]:
    stated = next(c for c in checks if c.name == "bound")
    certificate: typing.Dict[str, typing.Any] = {
        "variant": spec.kind,
        "constant": bound_constant(spec),
        "max_ratio": _max_ratio(stated),
        "passed": stated.passed,
    }
    if spec.has_proof_consistent_constant:
        proof = next(c for c in checks if c.name == "bound-proof-consistent")
        certificate.update(
            {
                "proof_consistent_constant": bound_constant(spec, proof_consistent=True),
                "proof_consistent_max_ratio": _max_ratio(proof),
                "proof_consistent_passed": proof.passed,
            }
        )
    return certificate


def _failed(name: str, tolerance: float, exc: Exception) -> CheckReport:
    logger.warning("%s check could not be completed: %s", name, exc)
    return CheckReport(name, False, math.inf, tolerance, 0)


def _scaling_report(
    config: ScenarioConfig, samples: typing.Sequence[AlgebraElement]
) -> CheckReport:
    shape = config.control_shape()
    report = scaling_check(shape, scaling_tuples(samples, shape.arity, config.anchor))
    return CheckReport(
        "scaling",
        report.passed,
        report.worst_ratio,
        1.0 + SCALING_SLACK,
        report.samples_used,
        report.worst_index if not report.passed else None,
    )


def run_checks(
    config: ScenarioConfig,
    f: AlgebraMap,
    corrected: CorrectedMap,
    spec: BoundSpec,
    samples: typing.Sequence[AlgebraElement],
) -> typing.List[CheckReport]:
    """Run the requested checks in order; the bound check of cor26-type variants runs twice."""
    tolerance = config.structure_tolerance(CHECK_TOLERANCE_FACTOR)
    mus = sample_unit_scalars(config.mu_grid)
    pairs = consecutive_pairs(samples)
    runners: typing.Dict[str, typing.Callable[[], CheckReport]] = {
        "additivity": lambda: check_additivity(corrected, pairs, tolerance),
        "homogeneity": lambda: check_homogeneity(corrected, mus, samples, tolerance),
        "njordan": lambda: check_njordan(corrected, config.n, samples, tolerance),
        "leibniz": lambda: check_leibniz(corrected, pairs, tolerance),
        "star": lambda: check_star(corrected, samples, tolerance),
        "odd": lambda: check_odd(f, samples, tolerance),
        "scaling": lambda: _scaling_report(config, samples),
    }
    reports: typing.List[CheckReport] = []
    for name in config.checks:
        if name == "bound":
            variants = [False, True] if spec.has_proof_consistent_constant else [False]
            for proof_consistent in variants:
                label = "bound-proof-consistent" if proof_consistent else "bound"
                try:
                    reports.append(check_bound(f, corrected, spec, samples, proof_consistent))
                except CalculationError as exc:
                    reports.append(_failed(label, 1.0, exc))
            continue
        try:
            reports.append(runners[name]())
        except CalculationError as exc:
            reports.append(_failed(name, tolerance, exc))
    return reports


def run_scenario(config: ScenarioConfig) -> Report:
    """
    Run a scenario.

    Builds D_b and f, fits theta (unless ``control.theta`` is given), corrects
    f on the cloud, runs the requested checks on the corrected map and
    assembles the report. The run is deterministic given the configuration.

    :param config: The validated scenario.
    :return: The report; ``passed`` is True iff every check passed.
    :raises DegenerateCloudError: If theta cannot be fitted on the cloud.

    Example:
        ```python
        report = run_scenario(load_config("scenarios/cor23_pass.toml"))
        print(report.passed, report.diagnostics["rate_estimate"])
        ```
    """
    started = time.perf_counter()
    _, f = build_maps(config)
    samples = sample_elements(config.cloud)

    fit = scenario_fit(config, f)
    theta = fit.theta_hat if config.control.theta is None else config.control.theta
    spec = config.bound_spec(theta)
    logger.info(
        "%s: theta_hat=%.6g, using theta=%.6g for %s",
        config.variant,
        fit.theta_hat,
        theta,
        spec.control.describe(),
    )

    corrected = CorrectedMap(f, config.corrector.tolerance, config.corrector.m_max)
    diagnostics = correct_cloud(corrected, samples)
    checks = run_checks(config, f, corrected, spec, samples)
    certificate = _certificate(spec, checks) if "bound" in config.checks else None
    passed = all(check.passed for check in checks)
    logger.info(
        "%s: %d/%d checks passed", config.variant, sum(c.passed for c in checks), len(checks)
    )

    return Report(
        version=__version__,
        config=dict(config.source),
        theta_fit={
            "theta_hat": fit.theta_hat,
            "theta_used": theta,
            "fitted": config.control.theta is None,
            "shape": fit.shape.describe(),
            "anchor": config.anchor.value,
            "tuples_used": fit.tuples_used,
            "tuples_skipped": fit.tuples_skipped,
        },
        checks=[check_to_dict(check) for check in checks],
        diagnostics=diagnostics_summary(diagnostics),
        certificate=certificate,
        passed=passed,
        wall_time=time.perf_counter() - started,
    )
