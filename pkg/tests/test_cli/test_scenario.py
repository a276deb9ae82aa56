"""Tests for running scenarios end to end."""

import json
import math

import pytest

from jordan_stability.cli.config import load_config, parse_config
from jordan_stability.cli.report import to_json
from jordan_stability.cli.scenario import Report, build_maps, encode, run_scenario
from jordan_stability.core.algebra import element, op_norm
from tests.conftest import SCENARIO_DIR, small_mapping

pytestmark = [pytest.mark.cli]

PASSING = sorted(SCENARIO_DIR.glob("*_pass.toml"))
FAILING = sorted(SCENARIO_DIR.glob("*_fail.toml"))


@pytest.fixture(scope="module")
def small_report() -> Report:
    return run_scenario(parse_config(small_mapping()))


class TestSmallScenario:
    """Test suite for a small cor23 scenario."""

    def test_passes(self, small_report):
        """Test the scenario passes every check."""
        assert small_report.passed
        assert [c["name"] for c in small_report.checks] == [
            "bound",
            "additivity",
            "homogeneity",
            "njordan",
            "leibniz",
        ]

    def test_rate_estimate(self, small_report):
        """Test the contraction rate 2^(p-1) is recovered."""
        assert small_report.diagnostics["rate_estimate"] == pytest.approx(2**-0.5, rel=1e-2)
        assert small_report.diagnostics["points"] == 20

    def test_certificate(self, small_report):
        """Test the certificate carries the cor23 constant for the fitted theta."""
        certificate = small_report.certificate
        theta = small_report.theta_fit["theta_used"]
        assert certificate["variant"] == "cor23"
        assert certificate["constant"] == pytest.approx(2**0.5 * theta / (2 - 2**0.5))
        assert certificate["max_ratio"] <= 1.0
        assert "proof_consistent_constant" not in certificate

    def test_theta_fit(self, small_report):
        """Test the theta fit is reported."""
        fit = small_report.theta_fit
        assert fit["fitted"]
        assert fit["theta_hat"] == fit["theta_used"]
        assert fit["theta_hat"] >= 0.1 * (2**0.5 - 1)
        assert fit["anchor"] == "x,0,0"
        assert fit["tuples_skipped"] == 4

    def test_config_is_echoed(self, small_report):
        """Test the report echoes the flat configuration."""
        assert small_report.config["variant"] == "cor23"
        assert small_report.config["cloud.count"] == 20

    def test_round_trip(self, small_report):
        """Test a report survives serialization."""
        restored = Report.from_dict(json.loads(to_json(small_report)))
        assert restored == small_report

    def test_check_lookup(self, small_report):
        """Test checks can be looked up by name."""
        assert small_report.check("njordan")["passed"]
        with pytest.raises(KeyError):
            small_report.check("star")


class TestDeterminism:
    """Test suite for reproducible runs."""

    def test_identical_reports(self):
        """Test two runs give byte-identical json without wall time."""
        config = parse_config(small_mapping(**{"cloud.count": 10}))
        first = json.dumps(run_scenario(config).to_dict(False), sort_keys=True)
        second = json.dumps(run_scenario(config).to_dict(False), sort_keys=True)
        assert first == second

    def test_seed_changes_cloud(self):
        """Test a different seed gives a different report."""
        first = run_scenario(parse_config(small_mapping(**{"cloud.count": 10})))
        second = run_scenario(parse_config(small_mapping(**{"cloud.count": 10}), seed=8))
        assert first.check("bound")["values"] != second.check("bound")["values"]


class TestNegativeControls:
    """Test suite for scenarios built to fail."""

    def test_fixed_small_theta_fails_bound(self):
        """Test a theta far below the defect fails the bound only."""
        report = run_scenario(parse_config(small_mapping(**{"control.theta": 1e-6})))
        assert not report.passed
        assert not report.check("bound")["passed"]
        assert report.check("additivity")["passed"]
        assert not report.theta_fit["fitted"]

    def test_constant_shift_has_infinite_theta(self):
        """Test f = D + E fails with an infinite theta."""
        overrides = {"perturbation.shape": "constant-shift", "perturbation.direction": "identity"}
        report = run_scenario(parse_config(small_mapping(**overrides)))
        assert math.isinf(report.theta_fit["theta_hat"])
        assert not report.passed
        assert report.check("bound")["bounds"] is None

    def test_hermitian_generator_fails_star(self):
        """Test a Hermitian generator fails the star check of a star variant."""
        overrides = {
            "variant": "cor24",
            "derivation.b": "random-hermitian",
            "perturbation.star_compatible": True,
        }
        report = run_scenario(parse_config(small_mapping(**overrides)))
        assert not report.check("star")["passed"]
        assert report.check("njordan")["passed"]

    def test_even_perturbation_fails_odd(self):
        """Test an even perturbation fails the odd check of an odd variant."""
        overrides = {"variant": "thm25", "control.exponent": 0.25}
        report = run_scenario(parse_config(small_mapping(**overrides)))
        assert not report.check("odd")["passed"]

    def test_oddify_repairs_even_perturbation(self):
        """Test the odd part of an even perturbation passes the odd check."""
        overrides = {"variant": "thm25", "control.exponent": 0.25, "perturbation.oddify": True}
        report = run_scenario(parse_config(small_mapping(**overrides)))
        assert report.check("odd")["passed"]


class TestBuildMaps:
    """Test suite for scenario maps."""

    def test_exact_scenario(self):
        """Test shape none gives f = D_b."""
        exact, f = build_maps(parse_config(small_mapping(**{"perturbation.shape": "none"})))
        x = element([[1, 2], [3, 4]])
        assert op_norm(f(x) - exact(x)) == 0.0

    def test_perturbed_scenario(self):
        """Test f differs from D_b by theta ||x||^p E."""
        exact, f = build_maps(parse_config(small_mapping()))
        x = element([[4, 0], [0, 0]])
        assert op_norm(f(x) - exact(x)) == pytest.approx(0.2)


class TestEncode:
    """Test suite for json encoding of values."""

    def test_complex_and_matrices(self):
        """Test complex numbers become [re, im] pairs."""
        assert encode(1 + 2j) == [1.0, 2.0]
        assert encode(element([[1j]])) == [[[0.0, 1.0]]]
        assert encode((1j, 2)) == [[0.0, 1.0], 2]


@pytest.mark.integration
@pytest.mark.slow
class TestShippedScenarios:
    """Test suite running every shipped scenario."""

    @pytest.mark.parametrize("path", PASSING, ids=lambda p: p.stem)
    def test_passing(self, path):
        """Test the passing scenarios pass every check."""
        report = run_scenario(load_config(path))
        failed = [c["name"] for c in report.checks if not c["passed"]]
        assert report.passed, f"failed checks: {failed}"

    @pytest.mark.parametrize("path", FAILING, ids=lambda p: p.stem)
    def test_failing(self, path):
        """Test the failing scenarios fail at least one check."""
        assert not run_scenario(load_config(path)).passed

    def test_cor23_rate(self):
        """Test the cor23 scenario contracts at 2^(p-1)."""
        report = run_scenario(load_config(SCENARIO_DIR / "cor23_pass.toml"))
        assert report.diagnostics["rate_estimate"] == pytest.approx(0.7071, abs=1e-3)

    def test_thm21_bounded_rate(self):
        """Test a bounded perturbation is corrected everywhere at rate 1/2."""
        report = run_scenario(load_config(SCENARIO_DIR / "thm21_bounded_pass.toml"))
        assert report.passed
        assert report.diagnostics["non_converged_count"] == 0
        assert report.diagnostics["rate_estimate"] == pytest.approx(0.5, abs=1e-3)

    def test_cor23_runs_quickly(self):
        """Test a shipped scenario finishes within ten seconds."""
        report = run_scenario(load_config(SCENARIO_DIR / "cor23_pass.toml"))
        assert report.wall_time < 10.0

    def test_cor26_certifies_both_constants(self):
        """Test the cor26 scenario certifies the stated and proof-consistent bounds."""
        report = run_scenario(load_config(SCENARIO_DIR / "cor26_pass.toml"))
        certificate = report.certificate
        assert certificate["passed"]
        assert certificate["proof_consistent_passed"]
        assert certificate["proof_consistent_constant"] > certificate["constant"]
        assert report.check("bound-proof-consistent")["passed"]

    def test_cor210_checks_leibniz_and_star(self):
        """Test the cor210 scenario confirms a *-derivation."""
        report = run_scenario(load_config(SCENARIO_DIR / "cor210_pass.toml"))
        assert report.check("leibniz")["passed"]
        assert report.check("star")["passed"]
