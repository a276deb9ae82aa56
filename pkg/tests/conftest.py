"""Shared test configuration and fixtures."""

from pathlib import Path

import numpy as np
import pytest

from jordan_stability.core.algebra import AlgebraElement, SampleSpec, element, sample_elements


def assert_matrix_close(actual: AlgebraElement, expected, atol: float = 1e-12):
    """
    Assert that two matrices agree entry for entry.

    Args:
        actual: Matrix returned by the code under test
        expected: Expected matrix or array-like
        atol: Absolute tolerance per entry (default: 1e-12)

    Raises:
        AssertionError: If any entry differs by more than atol
    """
    expected = np.asarray(expected, dtype=np.complex128)
    assert actual.shape == expected.shape, f"shape {actual.shape} != {expected.shape}"
    worst = float(np.max(np.abs(np.asarray(actual) - expected)))
    assert worst <= atol, f"matrices differ by {worst:.3g} (atol {atol:.3g})"


@pytest.fixture
def b_small() -> AlgebraElement:
    """A fixed non-normal generator of operator norm below 0.5."""
    return element([[0.1 + 0.2j, 0.25], [-0.05j, -0.15]])


@pytest.fixture
def b_skew() -> AlgebraElement:
    """A fixed skew-adjoint generator, b* = -b."""
    return element([[0.2j, 0.1 + 0.1j], [-0.1 + 0.1j, -0.05j]])


@pytest.fixture
def cloud_spec() -> SampleSpec:
    return SampleSpec(dim=2, count=40, radius=2.0, seed=11)


@pytest.fixture
def cloud(cloud_spec):
    return sample_elements(cloud_spec)


SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"

SMALL_SCENARIO = """\
variant = "cor23"
n = 2
seed = 3
algebra.dim = 2
derivation.b = "random"
derivation.scale = 0.5
perturbation.shape = "power"
perturbation.theta = 0.1
perturbation.exponent = 0.5
control.exponent = 0.5
cloud.count = 20
cloud.radius = 2.0
mu_grid = 4
"""


def small_mapping(**overrides) -> dict:
    """A small cor23 scenario as a flat mapping, with dotted-key overrides."""
    mapping = {
        "variant": "cor23",
        "n": 2,
        "seed": 3,
        "algebra.dim": 2,
        "derivation.b": "random",
        "perturbation.shape": "power",
        "perturbation.theta": 0.1,
        "perturbation.exponent": 0.5,
        "control.exponent": 0.5,
        "cloud.count": 20,
        "cloud.radius": 2.0,
        "mu_grid": 4,
    }
    mapping.update(overrides)
    return mapping


@pytest.fixture
def small_scenario(tmp_path) -> Path:
    """A small passing cor23 scenario file."""
    path = tmp_path / "small.toml"
    path.write_text(SMALL_SCENARIO, encoding="utf-8")
    return path
