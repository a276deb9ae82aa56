"""Tests for control functions and the generalized metric."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jordan_stability.core.algebra import SampleSpec, element, identity, sample_elements, zero
from jordan_stability.core.control import (
    Anchor,
    custom,
    generalized_distance,
    phi_eval,
    phi_eval_many,
    power_sum,
    power_sum_star,
    product_power,
    product_power_star,
    scaling_check,
    scaling_tuples,
)
from jordan_stability.core.maps import PerturbationSpec, inner_derivation, perturb, zero_map
from jordan_stability.exceptions import ContractViolationError, InvalidInputError

pytestmark = [pytest.mark.unit, pytest.mark.control]


class TestConstructors:
    """Test suite for built-in control functions."""

    def test_power_sum_constant(self):
        """Test L = 2^(p-1) for the power-sum shape."""
        assert power_sum(1.0, 0.5).L == pytest.approx(2**-0.5)

    def test_product_power_constant(self):
        """Test L = 2^(2r-1) for the product-power shape."""
        assert product_power(1.0, 0.25).L == pytest.approx(2**-0.5)

    def test_star_arity(self):
        """Test star variants take four arguments."""
        assert power_sum_star(1.0, 0.5).arity == 4
        assert product_power_star(1.0, 0.25).is_star
        assert not power_sum(1.0, 0.5).is_star

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
    def test_power_sum_exponent_range(self, p):
        """Test that p outside (0, 1) is rejected."""
        with pytest.raises(InvalidInputError):
            power_sum(1.0, p)

    @pytest.mark.parametrize("r", [0.0, 0.5, 0.75])
    def test_product_power_exponent_range(self, r):
        """Test that r outside (0, 1/2) is rejected."""
        with pytest.raises(InvalidInputError):
            product_power(1.0, r)

    def test_negative_theta_raises_error(self):
        """Test that theta < 0 is rejected."""
        with pytest.raises(InvalidInputError):
            power_sum(-1.0, 0.5)

    @pytest.mark.parametrize("L", [0.0, 1.0, 1.2])
    def test_custom_contraction_range(self, L):
        """Test that a custom L outside (0, 1) is rejected."""
        with pytest.raises(InvalidInputError):
            custom(lambda x, y, a: 0.0, L)

    def test_custom_arity(self):
        """Test that custom arities other than 3 and 4 are rejected."""
        with pytest.raises(InvalidInputError):
            custom(lambda x, y: 0.0, 0.5, arity=2)

    def test_with_theta(self):
        """Test rescaling keeps the shape."""
        phi = power_sum(1.0, 0.5).with_theta(3.0)
        assert phi.theta == 3.0
        assert phi.shape == "power-sum"


class TestPhiEval:
    """Test suite for evaluating control functions."""

    def test_power_sum_value(self):
        """Test phi(4, 0, 0) = theta * 4^0.5."""
        x = 4.0 * identity(2)
        assert phi_eval(power_sum(1.0, 0.5), x, zero(2), zero(2)) == pytest.approx(2.0)

    def test_product_power_value(self):
        """Test phi(x, 3x, a) = theta (3^r ||x||^(2r) + ||a||^(2r))."""
        x = identity(2)
        a = 4.0 * identity(2)
        value = phi_eval(product_power(2.0, 0.25), x, 3.0 * x, a)
        assert value == pytest.approx(2.0 * (3**0.25 + 2.0))

    def test_product_power_vanishes_on_x00(self):
        """Test product-power controls vanish on (x, 0, 0)."""
        x = identity(2)
        assert phi_eval(product_power(1.0, 0.25), x, zero(2), zero(2)) == 0.0

    def test_star_term(self):
        """Test the fourth argument adds ||w||^p."""
        w = 9.0 * identity(2)
        origin = zero(2)
        value = phi_eval(power_sum_star(1.0, 0.5), origin, origin, origin, w)
        assert value == pytest.approx(3.0)

    def test_arity_mismatch_raises_error(self):
        """Test that the argument count must match the arity."""
        origin = zero(2)
        with pytest.raises(InvalidInputError):
            phi_eval(power_sum_star(1.0, 0.5), origin, origin, origin)
        with pytest.raises(InvalidInputError):
            phi_eval(power_sum(1.0, 0.5), origin, origin, origin, origin)

    def test_zero_theta_is_zero(self):
        """Test theta = 0 gives the zero control."""
        x = identity(2)
        assert phi_eval(power_sum(0.0, 0.5), x, x, x) == 0.0

    def test_custom_negative_value_raises_error(self):
        """Test that a negative custom value violates the contract."""
        phi = custom(lambda x, y, a: -1.0, 0.5)
        origin = zero(2)
        with pytest.raises(ContractViolationError):
            phi_eval(phi, origin, origin, origin)


class TestScalingCheck:
    """Test suite for the scaling law phi(args) <= 2L phi(args / 2)."""

    @pytest.mark.parametrize(
        "phi,anchor",
        [
            (power_sum(1.0, 0.3), Anchor.X00),
            (power_sum_star(1.0, 0.7), Anchor.X00),
            (product_power(1.0, 0.25), Anchor.X3X0),
            (product_power_star(1.0, 0.4), Anchor.X3X0),
        ],
    )
    def test_built_in_shapes_pass(self, phi, anchor, cloud):
        """Test the built-in shapes satisfy the law."""
        report = scaling_check(phi, scaling_tuples(cloud, phi.arity, anchor))
        assert report.passed
        assert report.worst_ratio <= 1.0 + 1e-9

    def test_custom_with_understated_constant_fails(self, cloud):
        """Test that a homogeneous phi with declared L = 0.4 fails the law."""
        phi = custom(lambda x, y, a: float(abs(x).max()), 0.4)
        report = scaling_check(phi, scaling_tuples(cloud, 3))
        assert not report.passed
        assert report.worst_ratio == pytest.approx(2.5, rel=1e-9)
        assert report.worst_index is not None

    def test_scaling_tuples_wrap_around(self, cloud):
        """Test one tuple per sample with wrap-around."""
        tuples = scaling_tuples(cloud, 3)
        assert len(tuples) == len(cloud)
        assert tuples[-1][1] is cloud[0]

    def test_x3x0_tuples(self, cloud):
        """Test the (x, 3x, a) tuples of the odd-map anchor."""
        x, y, _ = scaling_tuples(cloud, 3, Anchor.X3X0)[0]
        assert (y == 3.0 * x).all()

    def test_empty_samples_raise_error(self):
        """Test that an empty sample list is rejected."""
        with pytest.raises(InvalidInputError):
            scaling_check(power_sum(1.0, 0.5), [])

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.05, max_value=0.95), st.integers(min_value=0, max_value=1000))
    def test_power_sum_property(self, p, seed):
        """Test the power-sum law for arbitrary exponents and clouds."""
        samples = sample_elements(SampleSpec(dim=2, count=6, radius=3.0, seed=seed))
        report = scaling_check(power_sum(1.0, p), scaling_tuples(samples, 3))
        assert report.passed


class TestAnchor:
    """Test suite for anchors."""

    def test_x00_arguments(self):
        """Test (x, 0, 0) and (x, 0, 0, 0)."""
        x = identity(2)
        args = Anchor.X00.arguments(x, 4)
        assert len(args) == 4
        assert all(not a.any() for a in args[1:])

    def test_x3x0_arguments(self):
        """Test (x, 3x, 0)."""
        x = element([[1, 2], [3, 4]])
        args = Anchor.X3X0.arguments(x, 3)
        assert (args[1] == 3.0 * x).all()
        assert not args[2].any()

    def test_anchor_from_value(self):
        """Test anchors parse from their string values."""
        assert Anchor("x,3x,0") is Anchor.X3X0


class TestGeneralizedDistance:
    """Test suite for the generalized metric."""

    def test_distance_to_self_is_zero(self, b_small, cloud):
        """Test d(f, f) = 0."""
        D = inner_derivation(b_small)
        result = generalized_distance(D, D, power_sum(1.0, 0.5), Anchor.X00, cloud)
        assert result.value == 0.0
        assert not result.is_infinite

    def test_distance_of_power_perturbation(self, b_small, cloud):
        """Test d(D + theta ||x||^p E, D) = theta for phi = ||x||^p."""
        D = inner_derivation(b_small)
        f = perturb(D, PerturbationSpec.power(0.1, 0.5, identity(2)))
        result = generalized_distance(f, D, power_sum(1.0, 0.5), Anchor.X00, cloud)
        assert result.value == pytest.approx(0.1, rel=1e-9)

    def test_constant_shift_is_infinitely_far(self, cloud):
        """Test that a constant shift is at infinite distance at x = 0."""
        E = identity(2)
        f = perturb(zero_map(2), PerturbationSpec.constant_shift(E))
        result = generalized_distance(f, zero_map(2), power_sum(1.0, 0.5), Anchor.X00, [zero(2)])
        assert result.is_infinite
        assert result.value == math.inf

    def test_symmetry(self, b_small, cloud):
        """Test d(g, h) = d(h, g)."""
        D = inner_derivation(b_small)
        f = perturb(D, PerturbationSpec.bounded(0.2, identity(2)))
        phi = power_sum(1.0, 0.5)
        forward = generalized_distance(f, D, phi, Anchor.X00, cloud)
        backward = generalized_distance(D, f, phi, Anchor.X00, cloud)
        assert forward.value == pytest.approx(backward.value)

    def test_triangle_inequality(self, b_small, cloud):
        """Test d(f, g) <= d(f, h) + d(h, g) for three perturbations of one derivation."""
        D = inner_derivation(b_small)
        E = identity(2)
        maps = [
            perturb(D, PerturbationSpec.power(0.1, 0.5, E)),
            perturb(D, PerturbationSpec.bounded(0.2, E)),
            perturb(D, PerturbationSpec.odd_power(0.3, 0.5, E)),
        ]
        phi = power_sum(1.0, 0.5)
        for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
            direct = generalized_distance(maps[i], maps[j], phi, Anchor.X00, cloud).value
            via = generalized_distance(maps[i], maps[k], phi, Anchor.X00, cloud).value
            back = generalized_distance(maps[k], maps[j], phi, Anchor.X00, cloud).value
            assert direct <= (via + back) * (1 + 1e-12)

    def test_vanishing_control_with_equal_values_is_skipped(self, b_small, cloud):
        """Test x = 0 does not change the distance when both maps vanish there."""
        D = inner_derivation(b_small)
        f = perturb(D, PerturbationSpec.power(0.1, 0.5, identity(2)))
        phi = power_sum(1.0, 0.5)
        with_origin = generalized_distance(f, D, phi, Anchor.X00, [zero(2)] + list(cloud))
        without = generalized_distance(f, D, phi, Anchor.X00, cloud)
        assert with_origin.value == without.value
        only_origin = generalized_distance(f, D, phi, Anchor.X00, [zero(2)])
        assert only_origin.value == 0.0
        assert only_origin.witness is None


class TestPhiEvalMany:
    """Test suite for control values on stacks of arguments."""

    @pytest.mark.parametrize(
        "phi",
        [power_sum(0.5, 0.3), product_power(2.0, 0.25), power_sum_star(1.0, 0.5)],
        ids=lambda phi: phi.shape,
    )
    def test_matches_single_evaluation(self, phi, cloud):
        """Test every row equals phi_eval at that tuple."""
        columns = [np.stack(cloud[i : i + 10]) for i in range(phi.arity)]
        values = phi_eval_many(phi, *columns)
        for row, value in enumerate(values):
            args = [column[row] for column in columns]
            assert value == pytest.approx(phi_eval(phi, *args), rel=1e-14)

    def test_custom_control(self, cloud):
        """Test custom controls are evaluated row by row."""
        phi = custom(lambda x, y, a: 1.0, L=0.5, theta=3.0)
        columns = [np.stack(cloud[:4])] * 3
        assert list(phi_eval_many(phi, *columns)) == [3.0] * 4

    def test_arity_mismatch_raises_error(self, cloud):
        """Test a missing star argument is rejected."""
        stack = np.stack(cloud[:2])
        with pytest.raises(InvalidInputError):
            phi_eval_many(power_sum_star(1.0, 0.5), stack, stack, stack)
