"""
Command line entry point.

    jordan-stability run <config>        run a scenario and emit its report
    jordan-stability defect <config>     defect statistics of f on the cloud
    jordan-stability correct <config>    corrector diagnostics on the cloud
    jordan-stability constants <variant> key=value ...

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 runtime failure.
"""

import argparse
import logging
import sys
import typing

import pandas as pd

from jordan_stability import __version__
from jordan_stability.cli.config import load_config
from jordan_stability.cli.report import FORMATS, emit_report
from jordan_stability.cli.scenario import build_maps, run_scenario, scenario_fit
from jordan_stability.core.algebra import op_norm, sample_elements, sample_unit_scalars
from jordan_stability.core.control import (
    ControlFunction,
    custom,
    power_sum,
    power_sum_star,
    product_power,
    product_power_star,
)
from jordan_stability.core.corrector import correct_cloud, rate_estimate
from jordan_stability.core.defects import argument_tuples, control_values, defect_samples
from jordan_stability.core.verify import STAR_VARIANTS, VARIANTS, BoundSpec, bound_constant
from jordan_stability.exceptions import (
    ConfigError,
    InsufficientDataError,
    InvalidInputError,
    StabilityError,
)

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _configure_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _emit_table(table: pd.DataFrame, fmt: str, out: typing.Optional[str]) -> None:
    if fmt == "csv":
        text = table.to_csv(index=False)
    elif fmt == "json":
        text = table.to_json(orient="records", indent=2) + "\n"
    else:
        text = table.describe().to_string() + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config, seed=args.seed)
    report = run_scenario(config)
    emit_report(report, args.format, args.out)
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILED


def cmd_defect(args: argparse.Namespace) -> int:
    config = load_config(args.config, seed=args.seed)
    _, f = build_maps(config)
    shape = config.control_shape()
    fit = scenario_fit(config, f)
    tuples = argument_tuples(
        sample_elements(config.cloud),
        sample_unit_scalars(config.mu_grid),
        shape.arity,
        config.anchor,
    )
    rows = []
    phis = control_values(shape, tuples)
    for sample, phi in zip(defect_samples(f, tuples, config.n), phis):
        arguments = sample.arguments
        rows.append(
            {
                "mu_re": arguments.mu.real,
                "mu_im": arguments.mu.imag,
                "norm_x": op_norm(arguments.x),
                "norm_y": op_norm(arguments.y),
                "norm_a": op_norm(arguments.a),
                "jensen": sample.jensen,
                "njordan": sample.njordan,
                "star": sample.star,
                "combined": sample.combined,
                "phi": float(phi),
                "ratio": sample.combined / phi if phi > 0 else None,
            }
        )
    logger.info("theta_hat=%.6g over %d tuples", fit.theta_hat, fit.tuples_used)
    _emit_table(pd.DataFrame(rows), args.format, args.out)
    return EXIT_PASS


def cmd_correct(args: argparse.Namespace) -> int:
    config = load_config(args.config, seed=args.seed)
    exact, f = build_maps(config)
    samples = sample_elements(config.cloud)
    diagnostics = correct_cloud(f, samples, config.corrector.tolerance, config.corrector.m_max)
    rows = []
    for index, record in enumerate(diagnostics.points):
        try:
            rate: typing.Optional[float] = rate_estimate(record)
        except InsufficientDataError:
            rate = None
        error = None
        if record.final_value is not None:
            error = op_norm(record.final_value - exact(record.x))
        rows.append(
            {
                "sample_index": index,
                "norm": op_norm(record.x),
                "iterations_used": record.iterations_used,
                "converged": record.converged,
                "last_residual": record.residuals[-1] if record.residuals else None,
                "rate": rate,
                "error_vs_exact": error,
                "overflow_step": record.overflow_step,
            }
        )
    logger.info(
        "median iterations %g, rate %s, %d not converged",
        diagnostics.median_iterations,
        diagnostics.estimated_rate,
        diagnostics.non_converged_count,
    )
    _emit_table(pd.DataFrame(rows), args.format, args.out)
    return EXIT_PASS


def _parse_params(params: typing.Sequence[str]) -> typing.Dict[str, float]:
    parsed = {}
    for param in params:
        key, sep, value = param.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {param!r}", field="params")
        try:
            parsed[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"not a number: {value!r}", field=key) from exc
    return parsed


def constants_control(variant: str, params: typing.Mapping[str, float]) -> ControlFunction:
    """Build the control function of a variant from ``theta``, ``p``, ``r`` or ``L``."""
    theta = params.get("theta", 1.0)
    star = variant in STAR_VARIANTS
    try:
        if "L" in params:
            return custom(lambda *args: 0.0, params["L"], 4 if star else 3, theta)
        if "p" in params:
            return (power_sum_star if star else power_sum)(theta, params["p"])
        if "r" in params:
            return (product_power_star if star else product_power)(theta, params["r"])
    except InvalidInputError as exc:
        raise ConfigError(str(exc), field="params") from exc
    raise ConfigError("one of p, r or L is required", field="params")


def cmd_constants(args: argparse.Namespace) -> int:
    params = _parse_params(args.params)
    try:
        spec = BoundSpec(args.variant, constants_control(args.variant, params))
    except InvalidInputError as exc:
        raise ConfigError(str(exc), field="variant") from exc
    lines = [f"{args.variant} {spec.control.describe()}", f"stated={bound_constant(spec):.6f}"]
    if spec.has_proof_consistent_constant:
        lines.append(f"proof_consistent={bound_constant(spec, proof_consistent=True):.6f}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=None, help="output format")
    common.add_argument("--out", default=None, help="output file (directory for csv reports)")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    parser = argparse.ArgumentParser(
        prog="jordan-stability",
        description="Verify the fixed-point stability of approximate n-Jordan derivations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="run a scenario")
    run.add_argument("config", help="scenario file")
    run.set_defaults(handler=cmd_run, default_format="json")

    defect = commands.add_parser("defect", parents=[common], help="defect statistics only")
    defect.add_argument("config", help="scenario file")
    defect.set_defaults(handler=cmd_defect, default_format="text")

    correct = commands.add_parser("correct", parents=[common], help="corrector diagnostics only")
    correct.add_argument("config", help="scenario file")
    correct.set_defaults(handler=cmd_correct, default_format="text")

    constants = commands.add_parser("constants", parents=[common], help="print bound constants")
    constants.add_argument("variant", choices=VARIANTS)
    constants.add_argument("params", nargs="*", help="theta=..., p=..., r=... or L=...")
    constants.set_defaults(handler=cmd_constants, default_format="text")
    return parser


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    _configure_logging(args.quiet)
    try:
        return int(args.handler(args))
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG_ERROR
    except (StabilityError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
