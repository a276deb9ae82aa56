"""Report output: canonical json, per-check csv tables and a text summary."""

import json
import logging
import sys
import typing
from pathlib import Path

import pandas as pd

from jordan_stability.cli.scenario import Report
from jordan_stability.exceptions import ReportIOError

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "text")
CSV_COLUMNS = ("sample_index", "value", "bound", "ratio")


def to_json(report: Report, include_wall_time: bool = True) -> str:
    """Serialize a report; keys are sorted so identical reports give identical text."""
    return json.dumps(report.to_dict(include_wall_time), sort_keys=True, indent=2) + "\n"


def check_table(check: typing.Mapping[str, typing.Any]) -> pd.DataFrame:
    """
    Tabulate one check.

    Columns are ``sample_index``, ``value``, ``bound`` and ``ratio``. For bound
    checks ``bound`` is B(x); for structure checks it is the tolerance.

    :param check: A check entry of a report.
    :return: One row per checked item.
    """
    values = check["values"]
    bounds = check["bounds"] if check["bounds"] is not None else [check["tolerance"]] * len(values)
    table = pd.DataFrame(
        {
            "sample_index": range(len(values)),
            "value": pd.Series(values, dtype="float64"),
            "bound": pd.Series(bounds, dtype="float64"),
        }
    )
    table["ratio"] = table["value"] / table["bound"]
    return table.loc[:, list(CSV_COLUMNS)]


def text_summary(report: Report) -> str:
    """
    Render a human readable summary.

    The first line describes the scenario; then there is exactly one line per
    check ending in PASS or FAIL, followed by correction diagnostics.
    """
    config = report.config
    passed = sum(1 for check in report.checks if check["passed"])
    lines = [
        f"scenario {config.get('variant')} n={config.get('n', 2)} "
        f"dim={config.get('algebra.dim', 2)} seed={config.get('seed', 0)}: "
        f"{passed}/{len(report.checks)} checks passed"
    ]
    for check in report.checks:
        verdict = "PASS" if check["passed"] else "FAIL"
        lines.append(
            f"  {check['name']:<24} max_violation={check['max_violation']:.6g} "
            f"tolerance={check['tolerance']:.3g} {verdict}"
        )
    diagnostics = report.diagnostics
    rate = diagnostics["rate_estimate"]
    lines.append(
        f"theta_hat={report.theta_fit['theta_hat']:.6g} "
        f"median_iterations={diagnostics['median_iterations']:g} "
        f"rate={'n/a' if rate is None else format(rate, '.4f')} "
        f"non_converged={diagnostics['non_converged_count']}"
    )
    certificate = report.certificate
    if certificate is not None:
        line = (
            f"bound constant={certificate['constant']:.6g} "
            f"max_ratio={certificate['max_ratio']:.6g}"
        )
        if "proof_consistent_constant" in certificate:
            line += (
                f" proof_consistent_constant={certificate['proof_consistent_constant']:.6g}"
                f" proof_consistent_max_ratio={certificate['proof_consistent_max_ratio']:.6g}"
            )
        lines.append(line)
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror}") from exc


def emit_report(
    report: Report, format: str = "json", path: typing.Union[str, Path, None] = None
) -> typing.List[Path]:
    """
    Write a report.

    ``json`` is the canonical lossless format. ``csv`` writes one table per
    check into the directory ``path`` (``<check>.csv``). ``text`` writes the
    summary. Without a path the output goes to stdout.

    :param report: The report.
    :param format: One of ``json``, ``csv``, ``text``.
    :param path: Output file (json, text) or directory (csv).
    :return: The files written.
    :raises ValueError: If the format is unknown.
    :raises ReportIOError: If a file cannot be written.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown report format {format!r}, expected one of {FORMATS}")
    if format == "csv":
        return _emit_csv(report, path)
    text = to_json(report) if format == "json" else text_summary(report)
    if path is None:
        sys.stdout.write(text)
        return []
    target = Path(path)
    _write(target, text)
    logger.info("wrote %s report to %s", format, target)
    return [target]


def _emit_csv(report: Report, path: typing.Union[str, Path, None]) -> typing.List[Path]:
    if path is None:
        for check in report.checks:
            sys.stdout.write(f"# {check['name']}\n")
            sys.stdout.write(check_table(check).to_csv(index=False))
        return []
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create {directory}: {exc.strerror}") from exc
    written = []
    for check in report.checks:
        target = directory / f"{check['name']}.csv"
        _write(target, check_table(check).to_csv(index=False))
        written.append(target)
    logger.info("wrote %d csv tables to %s", len(written), directory)
    return written


def read_report(path: typing.Union[str, Path]) -> Report:
    """
    Read a json report written by ``emit_report``.

    :param path: The json file.
    :return: The report.
    :raises ReportIOError: If the file cannot be read.
    """
    target = Path(path)
    try:
        data = json.loads(target.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ReportIOError(f"cannot read {target}: {exc.strerror}") from exc
    return Report.from_dict(data)
