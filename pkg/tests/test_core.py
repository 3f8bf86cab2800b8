from fractions import Fraction

import numpy as np
import pytest

from services.errors import (
    AxisMismatch,
    InvalidRanges,
    NotValidated,
    ShapeMismatch,
    SingularMetric,
)
from services.tensors import (
    AxisClass,
    IndexRanges,
    ScalarKind,
    SmallTensor,
    contract,
    exact_determinant,
    exact_inverse,
    to_exact,
)
from services.varieties import (
    Ambient,
    DegenerateGaussTensors,
    FundamentalTensors,
    central_instance,
    degenerate_gauss_instance,
    ensure_valid,
    flat_normal_instance,
    random_instance,
    rational_orthogonal,
    validate_degenerate_gauss,
    validate_normalized,
)

N, P = AxisClass.NORMAL, AxisClass.TANGENT


def sphere_tensors(c_diagonal=("-1/2", "-1/2")) -> FundamentalTensors:
    return FundamentalTensors.build(
        Ambient.EUCLIDEAN,
        3,
        2,
        [[["1/2", 0], [0, "1/2"]]],
        [[[c_diagonal[0], 0], [0, c_diagonal[1]]]],
        None,
        [[1]],
        [[1, 0], [0, 1]],
    )


class TestIndexRanges:
    """Dimensions of a normalized variety."""

    def test_fiber_dimension(self):
        """
        GIVEN n = 5 and r = 3
        WHEN reading the first-normal dimension
        THEN l = n - r = 2
        """
        assert IndexRanges(5, 3).l == 2

    @pytest.mark.parametrize("n, r", [(2, 2), (3, 0), (3, 4)])
    def test_rejects_bad_ranks(self, n, r):
        """
        GIVEN r outside 1 <= r < n
        WHEN building the ranges
        THEN InvalidRanges is raised
        """
        with pytest.raises(InvalidRanges):
            IndexRanges(n, r)

    def test_rejects_small_embedding(self):
        """
        GIVEN bigN not larger than n
        WHEN building the ranges
        THEN InvalidRanges is raised
        """
        with pytest.raises(InvalidRanges):
            IndexRanges(3, 2, 3)


class TestScalars:
    """Exact scalar conversion and rational linear algebra."""

    @pytest.mark.parametrize(
        "value, expected",
        [("1/2", Fraction(1, 2)), (3, Fraction(3)), (0.1, Fraction(1, 10)), (" -2/4 ", Fraction(-1, 2))],
    )
    def test_to_exact(self, value, expected):
        """
        GIVEN an int, float or "p/q" string
        WHEN converting to a rational
        THEN the shortest decimal reading is used
        """
        assert to_exact(value) == expected

    def test_to_exact_rejects_booleans(self):
        """
        GIVEN a boolean
        WHEN converting to a rational
        THEN a TypeError is raised
        """
        with pytest.raises(TypeError):
            to_exact(True)

    def test_exact_inverse_and_determinant(self):
        """
        GIVEN the matrix [[2, 1], [1, 1]]
        WHEN inverting it exactly
        THEN the inverse is [[1, -1], [-1, 2]] and the determinant is 1
        """
        matrix = np.array([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(1)]], dtype=object)

        assert exact_inverse(matrix).tolist() == [[1, -1], [-1, 2]]
        assert exact_determinant(matrix) == 1

    def test_singular_inverse(self):
        """
        GIVEN a singular rational matrix
        WHEN inverting it
        THEN SingularMetric is raised
        """
        with pytest.raises(SingularMetric):
            exact_inverse(np.array([[1, 2], [2, 4]], dtype=object))


class TestSmallTensor:
    """Dense tensors tagged with index classes."""

    def test_dimension_mismatch(self):
        """
        GIVEN three declared axes and a matrix
        WHEN building the tensor
        THEN ShapeMismatch is raised
        """
        with pytest.raises(ShapeMismatch):
            SmallTensor.build([[1, 0], [0, 1]], (N, P, P))

    def test_contract_matches_loops(self):
        """
        GIVEN b[a, p, q] and c[a, p, q] with small integer entries
        WHEN contracting the normal index
        THEN every entry equals the explicit sum
        """
        rng = np.random.default_rng(3)
        b_values = rng.integers(-3, 4, size=(2, 3, 3))
        c_values = rng.integers(-3, 4, size=(2, 3, 3))
        b = SmallTensor.build(b_values, (N, P, P))
        c = SmallTensor.build(c_values, (N, P, P))

        result = contract(b, c, [(0, 0)])

        assert result.axes == (P, P, P, P)
        for p in range(3):
            for q in range(3):
                for s in range(3):
                    for t in range(3):
                        expected = sum(int(b_values[a, p, q]) * int(c_values[a, s, t]) for a in range(2))
                        assert result.data[p, q, s, t] == expected

    def test_contract_rejects_wrong_classes(self):
        """
        GIVEN a normal axis paired with a tangent axis
        WHEN contracting
        THEN AxisMismatch is raised
        """
        b = SmallTensor.build(np.zeros((1, 2, 2), dtype=int), (N, P, P))

        with pytest.raises(AxisMismatch):
            contract(b, b, [(0, 1)])

    def test_contract_rejects_mixed_kinds(self):
        """
        GIVEN an exact and a float tensor
        WHEN contracting
        THEN AxisMismatch is raised
        """
        exact = SmallTensor.build([[1, 0], [0, 1]], (P, P))
        floating = SmallTensor.build([[1.0, 0.0], [0.0, 1.0]], (P, P), ScalarKind.FLOAT)

        with pytest.raises(AxisMismatch):
            contract(exact, floating, [(1, 0)])


class TestValidateNormalized:
    """Structural identities of normalized data."""

    def test_sphere_data_passes(self):
        """
        GIVEN Euclidean data with c = -g^-1 g b
        WHEN validating
        THEN no violation is reported
        """
        report = validate_normalized(sphere_tensors())

        assert report.passed
        assert report.violations == ()

    def test_perturbed_c_fails(self):
        """
        GIVEN Euclidean data whose c breaks metric compatibility
        WHEN validating
        THEN the c-metric-compatibility check fails
        """
        report = validate_normalized(sphere_tensors(("-1/2", "-1/3")))

        assert not report.passed
        assert "Eq. 64 (c-metric-compatibility)" in report.violations

    def test_asymmetric_b(self):
        """
        GIVEN b^1 = [[0, 1], [0, 0]]
        WHEN validating affine data
        THEN b-symmetry is violated
        """
        data = FundamentalTensors.build("affine", 3, 2, [[[0, 1], [0, 0]]], [[[0, 0], [0, 0]]])

        assert "b-symmetry" in validate_normalized(data).violations

    def test_affine_requires_vanishing_l(self):
        """
        GIVEN affine data with l_pq != 0
        WHEN validating
        THEN affine-l-vanishes is violated
        """
        data = FundamentalTensors.build(
            "affine", 3, 2, [[[1, 0], [0, 1]]], [[[0, 0], [0, 0]]], [[1, 0], [0, 0]]
        )

        assert "Eq. 50 (affine-l-vanishes)" in validate_normalized(data).violations

    def test_missing_metric(self):
        """
        GIVEN Euclidean data without metrics
        WHEN validating
        THEN metric-missing is reported
        """
        data = FundamentalTensors.build("euclidean", 3, 2, [[[1, 0], [0, 1]]], [[[0, 0], [0, 0]]])

        assert "metric-missing" in validate_normalized(data).violations

    def test_wrong_extent(self):
        """
        GIVEN c with a 3 x 3 tangent block for r = 2
        WHEN validating
        THEN ShapeMismatch is raised
        """
        data = FundamentalTensors.build(
            "affine", 3, 2, [[[1, 0], [0, 1]]], np.zeros((1, 3, 3), dtype=int)
        )

        with pytest.raises(ShapeMismatch):
            validate_normalized(data)

    def test_ensure_valid_lists_violations(self):
        """
        GIVEN data that fails validation
        WHEN an operation requires valid data
        THEN NotValidated carries the violated checks
        """
        with pytest.raises(NotValidated) as error:
            ensure_valid(sphere_tensors(("-1/2", "-1/3")))

        assert error.value.violations == ["Eq. 64 (c-metric-compatibility)"]


class TestDegenerateGauss:
    """Symmetry of every product B^alpha C_i."""

    def test_non_symmetric_product(self):
        """
        GIVEN B = [[1, 0], [0, 0]] and C_1 = [[0, 1], [0, 0]]
        WHEN validating
        THEN h-symmetry is violated
        """
        data = DegenerateGaussTensors.build(3, 2, 4, [[[1, 0], [0, 0]]], [[[0, 1], [0, 0]]])

        report = validate_degenerate_gauss(data)

        assert not report.passed
        assert report.violations == ("h-symmetry",)

    @pytest.mark.parametrize("seed", range(20))
    def test_seeded_instances_pass(self, seed):
        """
        GIVEN a seeded degenerate-Gauss instance
        WHEN validating
        THEN it passes
        """
        data = degenerate_gauss_instance(IndexRanges(4, 2, 6), seed)

        assert validate_degenerate_gauss(data).passed

    def test_seeded_perturbations_fail(self):
        """
        GIVEN 100 seeded instances and C_1 moved by 1 in one entry, off the diagonal or on it
        WHEN validating
        THEN an instance is flagged exactly when some product B^alpha C_1 loses its symmetry,
        and one of the three moves always does that
        """
        for seed in range(100):
            data = degenerate_gauss_instance(IndexRanges(4, 2, 7), seed)
            assert validate_degenerate_gauss(data).passed, seed
            detected = []
            for i, j in [(0, 1), (0, 0), (1, 0)]:
                perturbed_c = data.c_a.data.copy()
                perturbed_c[0, i, j] += Fraction(1)
                products = [np.dot(b, perturbed_c[0]) for b in data.b_alpha.data]
                broken = any((product != product.T).any() for product in products)

                report = validate_degenerate_gauss(
                    DegenerateGaussTensors.build(4, 2, 7, data.b_alpha.data, perturbed_c)
                )

                assert report.passed is not broken, (seed, i, j)
                assert ("h-symmetry" in report.violations) is broken, (seed, i, j)
                detected.append(broken)
            assert any(detected), seed


class TestSeededConstructors:
    """Deterministic instances for property checks."""

    @pytest.mark.parametrize("ambient", ["projective", "affine", "euclidean"])
    def test_random_instances_validate(self, ambient):
        """
        GIVEN many seeds and each ambient tag
        WHEN building random instances
        THEN every instance passes validation
        """
        for seed in range(100):
            for n, r in [(3, 2), (4, 2), (5, 3)]:
                data = random_instance(IndexRanges(n, r), ambient, seed)
                assert validate_normalized(data).passed, (ambient, seed, n, r)

    def test_affine_instance_has_vanishing_l(self):
        """
        GIVEN an affine random instance
        WHEN reading l_pq
        THEN it is zero
        """
        assert random_instance(IndexRanges(3, 2), "affine", 1).lten.is_zero()

    def test_same_seed_same_instance(self):
        """
        GIVEN one seed used twice
        WHEN building instances
        THEN the tensors are identical
        """
        first = random_instance(IndexRanges(4, 2), "euclidean", 7)
        second = random_instance(IndexRanges(4, 2), "euclidean", 7)

        assert np.array_equal(first.b.data, second.b.data)
        assert np.array_equal(first.c.data, second.c.data)
        assert np.array_equal(first.g_tangent.data, second.g_tangent.data)

    def test_euclidean_instance_is_exact(self):
        """
        GIVEN the euclidean instance with n = 4, r = 2, seed 7
        WHEN validating
        THEN it passes in rational arithmetic
        """
        data = random_instance(IndexRanges(4, 2), "euclidean", 7)

        assert data.kind is ScalarKind.EXACT
        assert validate_normalized(data, tolerance=0.0).passed

    def test_central_instance(self):
        """
        GIVEN a central instance
        WHEN reading c and l
        THEN both vanish
        """
        data = central_instance(IndexRanges(5, 3), 4)

        assert data.c.is_zero()
        assert data.lten.is_zero()

    def test_rational_orthogonal(self):
        """
        GIVEN a Cayley-transform matrix
        WHEN multiplying by its transpose
        THEN the identity comes back exactly
        """
        q = rational_orthogonal(np.random.default_rng(2), 3)

        assert np.dot(q, q.T).tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]

    @pytest.mark.parametrize("ambient", ["projective", "affine", "euclidean"])
    def test_flat_normal_instance_validates(self, ambient):
        """
        GIVEN a flat-normal instance
        WHEN validating
        THEN it passes
        """
        data = flat_normal_instance(IndexRanges(5, 3), ambient, 11)

        assert validate_normalized(data).passed
