"""Tests for maps on M_k(C)."""

import numpy as np
import pytest

from jordan_stability.core.algebra import element, identity, involution, op_norm, zero
from jordan_stability.core.maps import (
    FunctionMap,
    LinearMap,
    PerturbationSpec,
    constant_map,
    evaluate,
    identity_map,
    inner_derivation,
    involution_map,
    oddify,
    perturb,
    square_map,
    zero_map,
)
from jordan_stability.exceptions import ConfigError, InvalidInputError, IterateOverflowError
from tests.conftest import assert_matrix_close

pytestmark = [pytest.mark.unit, pytest.mark.maps]


class TestInnerDerivation:
    """Test suite for inner derivations."""

    def test_matrix_units(self):
        """Test D_b on matrix units."""
        D = inner_derivation(element([[1, 0], [0, 0]]))
        assert_matrix_close(D(element([[0, 1], [0, 0]])), [[0, 1], [0, 0]])

    def test_vanishes_at_zero(self, b_small):
        """Test D_b(0) = 0."""
        assert op_norm(inner_derivation(b_small)(zero(2))) == 0.0

    def test_leibniz_rule(self, b_small, cloud):
        """Test D(xy) = D(x) y + x D(y)."""
        D = inner_derivation(b_small)
        for x, y in zip(cloud, cloud[1:]):
            assert_matrix_close(D(x @ y), D(x) @ y + x @ D(y), atol=1e-13)

    def test_star_derivation_for_skew_generator(self, b_skew, cloud):
        """Test D(w*) = D(w)* when b is skew-adjoint."""
        D = inner_derivation(b_skew)
        for w in cloud:
            assert_matrix_close(D(involution(w)), involution(D(w)), atol=1e-14)

    def test_wrong_dimension_raises_error(self, b_small):
        """Test that arguments of another size are rejected."""
        with pytest.raises(InvalidInputError):
            inner_derivation(b_small)(identity(3))

    def test_values_are_read_only(self, b_small):
        """Test that map values cannot be modified."""
        value = evaluate(inner_derivation(b_small), identity(2))
        assert not value.flags.writeable


class TestLinearAndFunctionMaps:
    """Test suite for linear and custom maps."""

    def test_identity_map(self, cloud):
        """Test the identity map."""
        f = identity_map(2)
        assert_matrix_close(f(cloud[0]), cloud[0])

    def test_zero_map(self, cloud):
        """Test the zero map."""
        assert op_norm(zero_map(2)(cloud[0])) == 0.0

    def test_linear_map_shape_validation(self):
        """Test that a matrix that is not k^2 x k^2 is rejected."""
        with pytest.raises(InvalidInputError):
            LinearMap(np.eye(3))

    def test_transpose_as_linear_map(self):
        """Test a permutation matrix acting on vec(x)."""
        perm = np.zeros((4, 4))
        for i, j in [(0, 0), (1, 2), (2, 1), (3, 3)]:
            perm[i, j] = 1.0
        x = element([[1, 2], [3, 4]])
        assert_matrix_close(LinearMap(perm)(x), [[1, 3], [2, 4]])

    def test_square_and_involution_maps(self):
        """Test the square and involution maps."""
        x = element([[0, 1j], [0, 0]])
        assert op_norm(square_map(2)(x)) == 0.0
        assert_matrix_close(involution_map(2)(x), [[0, 0], [-1j, 0]])

    def test_non_finite_value_raises_overflow(self):
        """Test that a non-finite value raises IterateOverflowError."""
        f = FunctionMap(lambda x: x * np.inf, 2, name="blowup")
        with pytest.raises(IterateOverflowError):
            f(identity(2))


class TestPerturbationSpec:
    """Test suite for perturbation shapes."""

    def test_power_shape(self):
        """Test g(x) = theta ||x||^p E."""
        spec = PerturbationSpec.power(0.1, 0.5, identity(2))
        x = 4.0 * identity(2)
        assert_matrix_close(spec.term(x), 0.2 * np.eye(2))

    def test_power_shape_vanishes_at_zero(self):
        """Test the power shape is 0 at 0."""
        spec = PerturbationSpec.power(0.1, 0.5, identity(2))
        assert op_norm(spec.term(zero(2))) == 0.0

    def test_bounded_shape_saturates(self):
        """Test g(x) = c min(1, ||x||) E."""
        spec = PerturbationSpec.bounded(0.3, identity(2))
        assert_matrix_close(spec.term(0.5 * identity(2)), 0.15 * np.eye(2))
        assert_matrix_close(spec.term(7.0 * identity(2)), 0.3 * np.eye(2))

    def test_constant_shift(self):
        """Test g(x) = E everywhere, including 0."""
        E = element([[0, 1], [0, 0]])
        spec = PerturbationSpec.constant_shift(E)
        assert_matrix_close(spec.term(zero(2)), E)

    def test_odd_power_is_odd(self, cloud):
        """Test the odd-power shape satisfies g(-x) = -g(x)."""
        spec = PerturbationSpec.odd_power(0.1, 0.5, identity(2))
        for x in cloud:
            assert_matrix_close(spec.term(-x), -spec.term(x), atol=1e-15)

    def test_odd_power_with_identity_direction(self):
        """Test the odd-power shape with E = 1 is theta ||x||^(s-1) x."""
        spec = PerturbationSpec.odd_power(0.1, 0.5, identity(2))
        x = 4.0 * identity(2)
        assert_matrix_close(spec.term(x), 0.2 * np.eye(2))

    def test_direction_must_have_unit_norm(self):
        """Test that E with norm other than 1 is rejected."""
        with pytest.raises(ConfigError) as info:
            PerturbationSpec.power(0.1, 0.5, 2.0 * identity(2))
        assert info.value.field == "direction"

    def test_negative_theta_raises_error(self):
        """Test that a negative theta is rejected."""
        with pytest.raises(ConfigError):
            PerturbationSpec.power(-0.1, 0.5, identity(2))

    def test_unknown_shape_raises_error(self):
        """Test that an unknown shape is rejected."""
        with pytest.raises(ConfigError):
            PerturbationSpec("cubic", identity(2))

    def test_star_compatible_needs_hermitian(self):
        """Test that star compatibility requires a Hermitian direction."""
        with pytest.raises(ConfigError):
            PerturbationSpec.power(0.1, 0.5, element([[0, 1], [0, 0]]), star_compatible=True)

    def test_star_compatible_term(self, cloud):
        """Test g(x*) = g(x)* for a Hermitian direction."""
        spec = PerturbationSpec.odd_power(0.2, 0.5, identity(2), star_compatible=True)
        for x in cloud:
            assert_matrix_close(spec.term(involution(x)), involution(spec.term(x)), atol=1e-14)


class TestPerturbAndOddify:
    """Test suite for composed maps."""

    def test_perturbed_map_adds_term(self, b_small):
        """Test f = D_b + g."""
        D = inner_derivation(b_small)
        spec = PerturbationSpec.power(0.1, 0.5, identity(2))
        f = perturb(D, spec)
        x = element([[1, 2], [0, 1j]])
        assert_matrix_close(f(x), D(x) + spec.term(x), atol=1e-15)

    def test_perturb_dimension_mismatch(self, b_small):
        """Test that a direction of another size is rejected."""
        with pytest.raises(InvalidInputError):
            perturb(inner_derivation(b_small), PerturbationSpec.power(0.1, 0.5, identity(3)))

    def test_oddify_is_exactly_odd(self, b_small, cloud):
        """Test that the odd part satisfies g(-x) = -g(x) exactly."""
        f = perturb(inner_derivation(b_small), PerturbationSpec.power(0.1, 0.5, identity(2)))
        g = oddify(f)
        for x in cloud:
            assert np.array_equal(g(-x), -g(x))

    def test_oddify_removes_even_perturbation(self, b_small, cloud):
        """Test that the odd part of D_b + theta ||x||^p E is D_b."""
        D = inner_derivation(b_small)
        g = oddify(perturb(D, PerturbationSpec.power(0.1, 0.5, identity(2))))
        for x in cloud:
            assert_matrix_close(g(x), D(x), atol=1e-14)

    def test_constant_map(self):
        """Test the constant map x -> E."""
        E = identity(2)
        assert_matrix_close(constant_map(E)(zero(2)), E)

    def test_describe(self, b_small):
        """Test descriptions name the parts of a composed map."""
        f = perturb(inner_derivation(b_small), PerturbationSpec.power(0.1, 0.5, identity(2)))
        assert "inner-derivation" in f.describe()
        assert "power" in f.describe()


def _maps_under_test(b):
    E = identity(2)
    D = inner_derivation(b)
    return [
        D,
        perturb(D, PerturbationSpec.power(0.1, 0.5, E)),
        perturb(D, PerturbationSpec.bounded(0.1, E)),
        perturb(D, PerturbationSpec.odd_power(0.1, 0.5, E)),
        oddify(perturb(D, PerturbationSpec.power(0.1, 0.5, E))),
        constant_map(E),
        involution_map(2),
        square_map(2),
    ]


class TestMapMany:
    """Test suite for evaluation on stacks of arguments."""

    @pytest.mark.parametrize("index", range(8))
    def test_stack_matches_single_points(self, b_small, cloud, index):
        """Test each row of a batch equals the map at that point."""
        f = _maps_under_test(b_small)[index]
        values = f.map_many(np.stack(cloud))
        assert values.shape == (len(cloud), 2, 2)
        for x, value in zip(cloud, values):
            assert_matrix_close(value, f(x), atol=1e-13)

    def test_term_many_matches_term(self, cloud):
        """Test the batched perturbation term, including a zero row."""
        spec = PerturbationSpec.odd_power(0.2, 0.3, identity(2))
        points = [zero(2)] + list(cloud[:5])
        terms = spec.term_many(np.stack(points))
        for x, term in zip(points, terms):
            assert_matrix_close(term, spec.term(x), atol=1e-15)

    def test_empty_stack(self, b_small):
        """Test an empty stack gives an empty result."""
        values = inner_derivation(b_small).map_many(np.zeros((0, 2, 2)))
        assert values.shape == (0, 2, 2)

    def test_single_matrix_is_not_a_stack(self, b_small):
        """Test a 2-d argument is rejected."""
        with pytest.raises(InvalidInputError):
            inner_derivation(b_small).map_many(identity(2))

    def test_wrong_dimension_raises_error(self, b_small):
        """Test a stack of another matrix size is rejected."""
        with pytest.raises(InvalidInputError):
            inner_derivation(b_small).map_many(np.zeros((3, 3, 3)))

    def test_non_finite_row_raises_overflow(self):
        """Test a non-finite row raises unless the check is switched off."""
        f = FunctionMap(lambda x: x / np.abs(x).max() * np.inf, 2, name="blowup")
        stack = np.stack([identity(2), 2.0 * identity(2)])
        with np.errstate(invalid="ignore"):
            with pytest.raises(IterateOverflowError):
                f.map_many(stack)
            values = f.map_many(stack, check_finite=False)
        assert not np.all(np.isfinite(values))
