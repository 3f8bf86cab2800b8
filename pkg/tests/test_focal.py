from fractions import Fraction

import numpy as np
import pytest

from services.errors import NotFactorable, NotValidated, WrongAmbient, ZeroPoint
from services.focal import (
    FocalPoint,
    PointKind,
    dual_nondegenerate,
    expand_factors,
    factor_linear,
    focus_hypercone_poly,
    focus_hypersurface_poly,
    hypercone_at,
    infinity_slice_identity,
    jacobian_at,
)
from services.polynomial import MultiPoly
from services.tensors import IndexRanges, ScalarKind
from services.varieties import (
    DegenerateGaussTensors,
    FundamentalTensors,
    central_instance,
    degenerate_gauss_instance,
    flat_normal_instance,
    random_instance,
)


def affine(c, b=None) -> FundamentalTensors:
    c = np.array(c, dtype=object)
    l, r = c.shape[0], c.shape[1]
    if b is None:
        b = [np.eye(r, dtype=int).tolist() for _ in range(l)]
    return FundamentalTensors.build("affine", l + r, r, b, c)


@pytest.fixture(name="diag23")
def diag23_fixture() -> FundamentalTensors:
    return affine([[[2, 0], [0, 3]]])


class TestFocusHypersurface:
    """det(y0 I + y^a C_a)."""

    def test_central_data(self):
        """
        GIVEN c = 0 with r = 3
        WHEN building the focus hypersurface
        THEN the polynomial is y0^3
        """
        report = focus_hypersurface_poly(central_instance(IndexRanges(5, 3), 1))

        assert report.polynomial == MultiPoly(3, {(3, 0, 0): 1})
        assert report.variables == ("y0", "y1", "y2")

    def test_diagonal_normal(self, diag23: FundamentalTensors):
        """
        GIVEN C_1 = diag(2, 3)
        WHEN building the focus hypersurface
        THEN it is y0^2 + 5 y0 y1 + 6 y1^2
        """
        report = focus_hypersurface_poly(diag23)

        assert report.polynomial.render(report.variables) == "y0^2 + 5*y0*y1 + 6*y1^2"
        assert report.degree == 2

    @pytest.mark.parametrize("ambient", ["projective", "affine", "euclidean"])
    def test_contract_on_seeded_instances(self, ambient):
        """
        GIVEN seeded instances
        WHEN building the focus hypersurface
        THEN the degree is at most r, the y0^r coefficient is 1 and (1, 0, ..., 0) evaluates to 1
        """
        for seed in range(100):
            data = random_instance(IndexRanges(5, 3), ambient, seed)
            report = focus_hypersurface_poly(data)
            assert report.degree <= 3
            assert report.polynomial.coefficient((3, 0, 0)) == 1
            assert report.polynomial.evaluate(report.regular_point) == 1
            assert report.polynomial.is_homogeneous()

    def test_rejects_invalid_data(self):
        """
        GIVEN data with a non-symmetric b
        WHEN building the focus hypersurface
        THEN NotValidated is raised
        """
        data = affine([[[2, 0], [0, 3]]], b=[[[0, 1], [0, 0]]])

        with pytest.raises(NotValidated):
            focus_hypersurface_poly(data)

    def test_lowered_form(self):
        """
        GIVEN Euclidean data
        WHEN building the focus hypersurface
        THEN the lowered form det(y0 g - y_a b^a) is returned as well
        """
        data = random_instance(IndexRanges(4, 2), "euclidean", 3)

        report = focus_hypersurface_poly(data)

        assert report.lowered is not None
        assert report.lowered.degree() == 2


class TestFocusHypercone:
    """det(xi0 l + xi_a b^a) or det(xi_a b^a)."""

    def test_projective(self):
        """
        GIVEN projective data with l = I and b^1 = diag(1, -1)
        WHEN building the hypercone
        THEN it is (xi0 + xi1)(xi0 - xi1)
        """
        data = FundamentalTensors.build(
            "projective", 3, 2, [[[1, 0], [0, -1]]], [[[0, 0], [0, 0]]], [[1, 0], [0, 1]]
        )

        report = focus_hypercone_poly(data)

        assert report.polynomial == MultiPoly.linear([1, 1]) * MultiPoly.linear([1, -1])
        assert report.variables == ("xi0", "xi1")

    def test_affine_single_normal(self):
        """
        GIVEN affine data with b^1 = I
        WHEN building the hypercone
        THEN it is xi1^2
        """
        report = focus_hypercone_poly(affine([[[0, 0], [0, 0]]]))

        assert report.polynomial.render(report.variables) == "xi1^2"

    def test_dually_degenerate(self):
        """
        GIVEN b = 0
        WHEN building the hypercone
        THEN the zero polynomial comes back without a regular point
        """
        report = focus_hypercone_poly(affine([[[0, 0], [0, 0]]], b=[[[0, 0], [0, 0]]]))

        assert report.polynomial.is_zero()
        assert report.regular_point is None

    def test_hyperplane_on_hypercone(self):
        """
        GIVEN projective data with l = I and b^1 = diag(1, -1)
        WHEN testing the hyperplanes (1, 1) and (1, 0)
        THEN the first lies on the hypercone and the second does not
        """
        data = FundamentalTensors.build(
            "projective", 3, 2, [[[1, 0], [0, -1]]], [[[0, 0], [0, 0]]], [[1, 0], [0, 1]]
        )

        assert hypercone_at(data, [1, 1]) == (0, PointKind.SINGULAR)
        assert hypercone_at(data, [1, 0]) == (1, PointKind.REGULAR)


class TestJacobian:
    """Regular and singular points on a first normal."""

    def test_base_point_regular(self, diag23: FundamentalTensors):
        """
        GIVEN any data
        WHEN evaluating at (1, 0)
        THEN the value is 1 and the point is regular
        """
        assert jacobian_at(diag23, [1, 0]) == (1, PointKind.REGULAR)

    def test_focus(self, diag23: FundamentalTensors):
        """
        GIVEN C_1 = diag(2, 3)
        WHEN evaluating at (2, -1) and (1, 1)
        THEN the first is a focus and the second gives 12
        """
        assert jacobian_at(diag23, FocalPoint((2, -1))) == (0, PointKind.SINGULAR)
        assert jacobian_at(diag23, [1, 1]) == (12, PointKind.REGULAR)

    def test_zero_point(self, diag23: FundamentalTensors):
        """
        GIVEN the all-zero coordinates
        WHEN evaluating
        THEN ZeroPoint is raised
        """
        with pytest.raises(ZeroPoint):
            jacobian_at(diag23, [0, 0])


class TestDualNondegenerate:
    """Whether some hyperplane gives a nondegenerate second fundamental form."""

    def test_identity_form(self):
        """
        GIVEN b^1 = I
        WHEN testing dual nondegeneracy
        THEN it holds
        """
        data = DegenerateGaussTensors.build(3, 2, 4, [[[1, 0], [0, 1]]], [[[0, 0], [0, 0]]])

        assert dual_nondegenerate(data)

    def test_zero_forms(self):
        """
        GIVEN all b^alpha = 0
        WHEN testing dual nondegeneracy
        THEN it fails
        """
        data = DegenerateGaussTensors.build(3, 2, 5, [[[0, 0], [0, 0]]] * 2, [[[0, 0], [0, 0]]])

        assert not dual_nondegenerate(data)

    def test_common_kernel(self):
        """
        GIVEN two rank-one forms sharing the kernel vector (0, 1)
        WHEN testing dual nondegeneracy
        THEN it fails
        """
        data = DegenerateGaussTensors.build(
            3, 2, 5, [[[1, 0], [0, 0]], [[2, 0], [0, 0]]], [[[0, 0], [0, 0]]]
        )

        assert not dual_nondegenerate(data)


class TestFactorLinear:
    """Linear factors y0 + lambda^a y_a of the focus hypersurface."""

    def test_single_normal(self, diag23: FundamentalTensors):
        """
        GIVEN C_1 = diag(2, 3)
        WHEN factoring
        THEN the factors are y0 + 2 y1 and y0 + 3 y1
        """
        factors = factor_linear(diag23)

        assert [f.form for f in factors] == [MultiPoly.linear([1, 2]), MultiPoly.linear([1, 3])]
        assert all(f.multiplicity == 1 for f in factors)

    def test_repeated_root(self):
        """
        GIVEN C_1 = 2 I
        WHEN factoring
        THEN one factor y0 + 2 y1 with multiplicity 2 comes back
        """
        factors = factor_linear(affine([[[2, 0], [0, 2]]]))

        assert len(factors) == 1
        assert factors[0].form == MultiPoly.linear([1, 2])
        assert factors[0].multiplicity == 2

    def test_complex_foci(self):
        """
        GIVEN C_1 = [[0, -1], [1, 0]]
        WHEN factoring
        THEN the irreducible quadratic y0^2 + y1^2 is reported
        """
        factors = factor_linear(affine([[[0, -1], [1, 0]]]))

        assert len(factors) == 1
        assert factors[0].form == MultiPoly(2, {(2, 0): 1, (0, 2): 1})

    def test_two_commuting_normals(self):
        """
        GIVEN C_1 = diag(1, 2) and C_2 = diag(4, 5)
        WHEN factoring
        THEN the factors are y0 + y1 + 4 y2 and y0 + 2 y1 + 5 y2
        """
        data = affine(
            [[[1, 0], [0, 2]], [[4, 0], [0, 5]]],
            b=[[[1, 0], [0, 1]], [[1, 0], [0, -1]]],
        )

        factors = factor_linear(data)

        assert [f.form for f in factors] == [MultiPoly.linear([1, 1, 4]), MultiPoly.linear([1, 2, 5])]
        polynomial = focus_hypersurface_poly(data).polynomial
        rng = np.random.default_rng(0)
        product = expand_factors(factors, 3)
        for _ in range(100):
            point = [Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 9))) for _ in range(3)]
            assert product.evaluate(point) == polynomial.evaluate(point)

    def test_non_commuting(self):
        """
        GIVEN two C_a that do not commute
        WHEN factoring
        THEN NotFactorable is raised
        """
        data = affine([[[1, 0], [0, 2]], [[0, 1], [1, 0]]], b=[[[0, 0], [0, 0]], [[0, 0], [0, 0]]])

        with pytest.raises(NotFactorable):
            factor_linear(data)

    def test_curved_normal_connection(self):
        """
        GIVEN two normals with a curved normal connection
        WHEN factoring
        THEN NotFactorable is raised
        """
        data = affine([[[1, 0], [0, 2]], [[0, 0], [0, 0]]], b=[[[0, 1], [1, 0]], [[1, 0], [0, 1]]])

        with pytest.raises(NotFactorable):
            factor_linear(data)

    def test_flat_normal_instances(self):
        """
        GIVEN seeded instances whose B^a and C_b share an eigenbasis
        WHEN factoring
        THEN the product of the factors equals the focus polynomial exactly
        """
        for seed in range(20):
            data = flat_normal_instance(IndexRanges(5, 3), "affine", seed)
            factors = factor_linear(data)
            assert expand_factors(factors, 3) == focus_hypersurface_poly(data).polynomial

    def test_degenerate_gauss_data(self):
        """
        GIVEN seeded degenerate-Gauss data with commuting symmetric C_a
        WHEN factoring
        THEN the product of the factors equals the focus polynomial
        """
        data = degenerate_gauss_instance(IndexRanges(4, 2, 6), 3)

        factors = factor_linear(data)

        assert expand_factors(factors, 3) == focus_hypersurface_poly(data).polynomial

    def test_float_mode_matches_eigenvalues(self):
        """
        GIVEN float data with a single normal
        WHEN factoring
        THEN the factor coefficients are the eigenvalues of C_1
        """
        c = np.array([[[1.5, 0.25], [0.25, -0.5]]])
        data = FundamentalTensors.build(
            "affine", 3, 2, [[[1.0, 0.0], [0.0, 1.0]]], c, kind=ScalarKind.FLOAT
        )

        factors = factor_linear(data)

        found = sorted(float(f.form.coefficient((0, 1))) for f in factors)
        expected = sorted(np.linalg.eigvalsh(c[0]))
        assert np.allclose(found, expected, atol=1e-9)


class TestInfinitySlice:
    """Focus hypersurface at infinity against the metric-dual hypercone."""

    def test_diagonal_example(self):
        """
        GIVEN g = I and b^1 = diag(1, 2)
        WHEN comparing both slices
        THEN both are 2 y1^2 and the identity holds
        """
        data = FundamentalTensors.build(
            "euclidean", 3, 2, [[[1, 0], [0, 2]]], [[[-1, 0], [0, -2]]], None, [[1]], [[1, 0], [0, 1]]
        )

        identity = infinity_slice_identity(data)

        assert identity.holds
        assert identity.restricted == MultiPoly(1, {(2,): 2})
        assert identity.hypercone == MultiPoly(1, {(2,): 2})

    def test_vanishing_b(self):
        """
        GIVEN b = 0
        WHEN comparing both slices
        THEN both are zero and the identity holds
        """
        data = FundamentalTensors.build(
            "euclidean", 3, 2, [[[0, 0], [0, 0]]], [[[0, 0], [0, 0]]], None, [[1]], [[1, 0], [0, 1]]
        )

        identity = infinity_slice_identity(data)

        assert identity.holds
        assert identity.restricted.is_zero()

    @pytest.mark.parametrize("n, r", [(3, 2), (4, 2), (5, 3), (5, 2)])
    def test_random_euclidean_instances(self, n, r):
        """
        GIVEN seeded Euclidean instances
        WHEN comparing both slices
        THEN the identity holds exactly
        """
        for seed in range(50):
            assert infinity_slice_identity(random_instance(IndexRanges(n, r), "euclidean", seed)).holds

    def test_needs_euclidean_data(self, diag23: FundamentalTensors):
        """
        GIVEN affine data
        WHEN comparing slices
        THEN WrongAmbient is raised
        """
        with pytest.raises(WrongAmbient):
            infinity_slice_identity(diag23)
