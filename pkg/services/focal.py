"""Focus hypersurfaces, focus hypercones and their linear factors."""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from config.settings import DEFAULT_TOLERANCE
from services.curvature import flatness_report
from services.errors import (
    EigenFailure,
    NotFactorable,
    ShapeMismatch,
    WrongAmbient,
    ZeroPoint,
)
from services.polynomial import MultiPoly, determinant, product
from services.tensors import ScalarKind, is_zero_array, to_exact
from services.varieties import (
    Ambient,
    DegenerateGaussTensors,
    FundamentalTensors,
    ensure_valid,
)

logger = logging.getLogger(__name__)

Variety = FundamentalTensors | DegenerateGaussTensors


@dataclass(frozen=True)
class FocalPoint:
    """Homogeneous coordinates (y0, y1, ..., yl) of a point on a first normal."""

    coordinates: tuple[Fraction, ...]

    def __post_init__(self):
        coordinates = tuple(to_exact(x) for x in self.coordinates)
        if all(x == 0 for x in coordinates):
            raise ZeroPoint("homogeneous coordinates cannot all vanish")
        object.__setattr__(self, "coordinates", coordinates)


@dataclass(frozen=True)
class HyperplaneCoords:
    coordinates: tuple[Fraction, ...]

    def __post_init__(self):
        coordinates = tuple(to_exact(x) for x in self.coordinates)
        if all(x == 0 for x in coordinates):
            raise ZeroPoint("tangential coordinates cannot all vanish")
        object.__setattr__(self, "coordinates", coordinates)


@dataclass(frozen=True)
class FocalFactor:
    form: MultiPoly
    multiplicity: int = 1

    @property
    def degree(self) -> int:
        return self.form.degree()


@dataclass(frozen=True)
class FocalReport:
    polynomial: MultiPoly
    degree: int
    variables: tuple[str, ...]
    regular_point: tuple[Fraction, ...] | None
    factorization: tuple[FocalFactor, ...] | None = None
    lowered: MultiPoly | None = None


@dataclass(frozen=True)
class SliceIdentity:
    holds: bool
    restricted: MultiPoly
    hypercone: MultiPoly
    variables: tuple[str, ...]


class PointKind(str, Enum):
    REGULAR = "regular"
    SINGULAR = "singular"


def _c_matrices(data: Variety) -> np.ndarray:
    return data.c_a.data if isinstance(data, DegenerateGaussTensors) else data.c.data


def _form_matrices(data: Variety) -> np.ndarray:
    return data.b_alpha.data if isinstance(data, DegenerateGaussTensors) else data.b.data


def hypersurface_variables(l: int) -> tuple[str, ...]:  # noqa: E741
    return tuple(f"y{i}" for i in range(l + 1))


def hypercone_variables(data: Variety) -> tuple[str, ...]:
    if isinstance(data, DegenerateGaussTensors):
        return tuple(f"xi{k + 1}" for k in range(data.ranges.hyperplanes))
    if data.ambient.is_affine:
        return tuple(f"xi{k + 1}" for k in range(data.ranges.l))
    return tuple(f"xi{k}" for k in range(data.ranges.l + 1))


def _linear_pencil(constant: np.ndarray | None, matrices: np.ndarray) -> list[list[MultiPoly]]:
    """Matrix of linear forms z0 * constant + sum_k z_(k+1) * matrices[k].

    Without a constant term the variables are z_k for matrices[k].
    """
    forms = list(matrices) if constant is None else [constant, *matrices]
    size = forms[0].shape[0]
    return [
        [MultiPoly.linear([to_exact(m[p, q]) for m in forms]) for q in range(size)]
        for p in range(size)
    ]


def _identity(size: int) -> np.ndarray:
    return np.eye(size, dtype=int)


def _search_regular_point(poly: MultiPoly) -> tuple[Fraction, ...] | None:
    if poly.is_zero():
        return None
    for values in itertools.product((1, 0, -1, 2), repeat=poly.nvars):
        point = tuple(Fraction(v) for v in values)
        if any(point) and poly.evaluate(point) != 0:
            return point
    return None


def focus_hypersurface_poly(data: Variety, tolerance: float | None = None) -> FocalReport:
    """det(y0 d^p_q + y^a c^p_aq) in the variables (y0, y1, ..., yl).

    The (y0)^r coefficient is 1 by construction, so the polynomial is already
    canonical. Euclidean data also gets the lowered form
    det(y0 g_pq - y_a b^a_pq) with y_a = g_ab y^b.
    """
    ensure_valid(data, tolerance)
    l, r = data.ranges.l, data.ranges.r
    nvars = l + 1
    pencil = _linear_pencil(_identity(r), _c_matrices(data))
    polynomial = determinant(pencil, nvars)
    lowered = None
    if isinstance(data, FundamentalTensors) and data.ambient is Ambient.EUCLIDEAN:
        g_normal = data.g_normal.data
        raised_forms = -np.tensordot(g_normal, data.b.data, axes=(0, 0))  # -g_ab b^a
        lowered = determinant(
            _linear_pencil(data.g_tangent.data, raised_forms), nvars
        )
    return FocalReport(
        polynomial=polynomial,
        degree=polynomial.degree(),
        variables=hypersurface_variables(l),
        regular_point=(Fraction(1),) + (Fraction(0),) * l,
        lowered=lowered,
    )


def hypercone_determinant(data: Variety, tolerance: float | None = None) -> MultiPoly:
    """Unscaled focus-hypercone determinant."""
    ensure_valid(data, tolerance)
    forms = _form_matrices(data)
    if isinstance(data, FundamentalTensors) and not data.ambient.is_affine:
        nvars = data.ranges.l + 1
        return determinant(_linear_pencil(data.lten.data, forms), nvars)
    nvars = forms.shape[0]
    return determinant(_linear_pencil(None, forms), nvars)


def focus_hypercone_poly(data: Variety, tolerance: float | None = None) -> FocalReport:
    """det(xi0 l_pq + xi_a b^a_pq) for projective data, det(xi_a b^a_pq) otherwise.

    The polynomial is scaled so that its first coefficient in lexicographic
    order equals 1; a dually degenerate variety yields the zero polynomial.
    """
    polynomial = hypercone_determinant(data, tolerance).canonical()
    return FocalReport(
        polynomial=polynomial,
        degree=polynomial.degree(),
        variables=hypercone_variables(data),
        regular_point=_search_regular_point(polynomial),
    )


def jacobian_at(
    data: Variety, y: FocalPoint | Sequence[Any], tolerance: float | None = None
) -> tuple[Fraction, PointKind]:
    point = y if isinstance(y, FocalPoint) else FocalPoint(tuple(y))
    if len(point.coordinates) != data.ranges.l + 1:
        raise ShapeMismatch(
            f"expected {data.ranges.l + 1} coordinates, got {len(point.coordinates)}"
        )
    value = focus_hypersurface_poly(data, tolerance).polynomial.evaluate(point.coordinates)
    value = to_exact(value)
    return value, PointKind.SINGULAR if value == 0 else PointKind.REGULAR


def hypercone_at(
    data: Variety, xi: HyperplaneCoords | Sequence[Any], tolerance: float | None = None
) -> tuple[Fraction, PointKind]:
    """Hypercone determinant at a hyperplane; zero means the hyperplane lies on the focus hypercone."""
    hyperplane = xi if isinstance(xi, HyperplaneCoords) else HyperplaneCoords(tuple(xi))
    polynomial = hypercone_determinant(data, tolerance)
    if len(hyperplane.coordinates) != polynomial.nvars:
        raise ShapeMismatch(
            f"expected {polynomial.nvars} coordinates, got {len(hyperplane.coordinates)}"
        )
    value = to_exact(polynomial.evaluate(hyperplane.coordinates))
    if value == 0:
        logger.debug("hyperplane %s lies on the focus hypercone", hyperplane.coordinates)
    return value, PointKind.SINGULAR if value == 0 else PointKind.REGULAR


def dual_nondegenerate(data: Variety, tolerance: float | None = None) -> bool:
    polynomial = hypercone_determinant(data, tolerance)
    if data.kind is ScalarKind.EXACT:
        return not polynomial.is_zero()
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    return any(abs(float(c)) >= tolerance for c in polynomial.terms.values())


# Linear factorization of the focus hypersurface.


def _commutators_vanish(matrices: list[np.ndarray], kind: ScalarKind, tolerance: float) -> bool:
    for first, second in itertools.combinations(matrices, 2):
        commutator = np.dot(first, second) - np.dot(second, first)
        if not is_zero_array(commutator, kind, tolerance):
            return False
    return True


def _unit_in_y0(form: MultiPoly) -> MultiPoly:
    """Scale a factor so that its pure y0 term has coefficient 1."""
    lead = form.coefficient((form.degree(),) + (0,) * (form.nvars - 1))
    return form.scaled(1 / lead) if lead != 0 else form.canonical()


def _factor_exact(polynomial: MultiPoly, l: int) -> list[FocalFactor]:  # noqa: E741
    """Irreducible factors over the rationals.

    Rational foci give linear forms y0 + lambda^a y_a. With one normal every
    other irreducible factor is kept as it is; with several normals only the
    quadratics of conjugate pairs are accepted.
    """
    _, factors = polynomial.factor_list()
    result = [FocalFactor(_unit_in_y0(form), multiplicity) for form, multiplicity in factors]
    if l > 1 and any(f.degree > 2 for f in result):
        raise NotFactorable("the joint spectrum of the C_a is not rational")
    return result


def _joint_eigenvalues(matrices: list[np.ndarray], tolerance: float) -> np.ndarray:
    """Joint spectrum of a commuting family from the Schur form of a generic combination."""
    floats = [np.array(m, dtype=float) for m in matrices]
    if len(floats) == 1:
        try:
            return np.linalg.eigvals(floats[0]).reshape(-1, 1)
        except np.linalg.LinAlgError as e:
            raise EigenFailure(f"eigenvalue iteration did not converge: {e}")
    scale = max(1.0, max(float(np.max(np.abs(m))) for m in floats))
    rng = np.random.default_rng(0)
    for _ in range(5):
        weights = rng.uniform(0.5, 1.5, size=len(floats))
        combination = sum(w * m for w, m in zip(weights, floats))
        try:
            _, basis = scipy.linalg.schur(combination, output="complex")
        except (np.linalg.LinAlgError, ValueError) as e:
            raise EigenFailure(f"Schur iteration did not converge: {e}")
        triangular = [basis.conj().T @ m @ basis for m in floats]
        if all(np.max(np.abs(np.tril(t, -1)), initial=0.0) < 1e3 * tolerance * scale for t in triangular):
            return np.stack([np.diag(t) for t in triangular], axis=1)
    raise NotFactorable("the C_a could not be triangularized in one basis")


def _forms_from_spectrum(spectrum: np.ndarray, tolerance: float) -> list[MultiPoly]:
    scale = max(1.0, float(np.max(np.abs(spectrum), initial=0.0)))
    remaining = list(range(spectrum.shape[0]))
    forms: list[MultiPoly] = []
    while remaining:
        i = remaining.pop(0)
        root = spectrum[i]
        if np.max(np.abs(root.imag)) < 1e3 * tolerance * scale:
            forms.append(MultiPoly.linear([1] + [float(x) for x in root.real]))
            continue
        partner = min(remaining, key=lambda j: np.max(np.abs(spectrum[j] - root.conj())))
        remaining.remove(partner)
        nvars = len(root) + 1
        terms = {(2,) + (0,) * len(root): 1}
        for a, value in enumerate(root):
            exponents = [1] + [0] * len(root)
            exponents[a + 1] += 1
            terms[tuple(exponents)] = float(2 * value.real)
        for a, b in itertools.combinations_with_replacement(range(len(root)), 2):
            exponents = [0] * nvars
            exponents[a + 1] += 1
            exponents[b + 1] += 1
            weight = (root[a] * root[b].conjugate()).real * (1 if a == b else 2)
            terms[tuple(exponents)] = float(weight)
        forms.append(MultiPoly(nvars, terms))
    return forms


def _group(forms: list[MultiPoly]) -> list[FocalFactor]:
    counts: dict[MultiPoly, int] = {}
    for form in forms:
        counts[form] = counts.get(form, 0) + 1
    return [FocalFactor(form, count) for form, count in counts.items()]


def _ordered(factors: list[FocalFactor]) -> list[FocalFactor]:
    return sorted(factors, key=lambda f: (f.degree, sorted(f.form.terms.items())))


def expand_factors(factors: Sequence[FocalFactor], nvars: int) -> MultiPoly:
    return product((f.form**f.multiplicity for f in factors), nvars)


def factor_linear(data: Variety, tolerance: float | None = None) -> list[FocalFactor]:
    """Split the focus hypersurface into linear forms y0 + lambda^a y_a.

    Supported when there is a single normal, or when every B^a C_b is
    symmetric and the C_a commute. Complex conjugate foci come back as one
    real quadratic factor. Exact data is factored over the rationals; float
    data goes through the joint Schur form of the C_a.
    """
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    ensure_valid(data, tolerance)
    kind, l = data.kind, data.ranges.l
    matrices = [np.array(_c_matrices(data)[a]) for a in range(l)]
    if l > 1:
        if isinstance(data, FundamentalTensors) and not flatness_report(data, tolerance).normal_flat:
            raise NotFactorable("the normal connection is not flat")
        if not _commutators_vanish(matrices, kind, tolerance):
            raise NotFactorable("the matrices C_a do not commute")

    polynomial = focus_hypersurface_poly(data, tolerance).polynomial
    if kind is ScalarKind.EXACT:
        factors = _factor_exact(polynomial, l)
        if expand_factors(factors, l + 1) != polynomial:
            raise NotFactorable("the factors do not reproduce the focal polynomial")
        return _ordered(factors)

    spectrum = _joint_eigenvalues(matrices, tolerance)
    factors = _group(_forms_from_spectrum(spectrum, tolerance))
    expanded = expand_factors(factors, l + 1)
    rng = np.random.default_rng(0)
    for _ in range(100):
        point = rng.uniform(-1.0, 1.0, size=l + 1)
        expected = float(polynomial.evaluate(point))
        actual = float(expanded.evaluate(point))
        if abs(expected - actual) >= tolerance * max(1.0, abs(expected)) * 1e3:
            raise EigenFailure("the factors do not reproduce the focal polynomial")
    return _ordered(factors)


def _same_polynomial(left: MultiPoly, right: MultiPoly, kind: ScalarKind, tolerance: float | None) -> bool:
    if kind is ScalarKind.EXACT:
        return left == right
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    difference = left - right
    scale = max([1.0] + [abs(float(c)) for c in left.terms.values()])
    return all(abs(float(c)) <= tolerance * scale * 1e3 for c in difference.terms.values())


def infinity_slice_identity(data: FundamentalTensors, tolerance: float | None = None) -> SliceIdentity:
    """Compare the focus hypersurface at infinity with the metric-dual hypercone.

    The lowered hypersurface polynomial restricted to y0 = 0 must equal
    (-1)^r times the hypercone polynomial under xi_a = g_ab y^b.
    """
    if not isinstance(data, FundamentalTensors) or data.ambient is not Ambient.EUCLIDEAN:
        raise WrongAmbient("the slice identity needs Euclidean data")
    report = focus_hypersurface_poly(data, tolerance)
    restricted = report.lowered.restrict(0, 0)
    g_normal = [[to_exact(x) for x in row] for row in data.g_normal.data.tolist()]
    hypercone = hypercone_determinant(data, tolerance).substitute_linear(g_normal)
    sign = -1 if data.ranges.r % 2 else 1
    return SliceIdentity(
        holds=_same_polynomial(restricted, hypercone.scaled(sign), data.kind, tolerance),
        restricted=restricted,
        hypercone=hypercone,
        variables=report.variables[1:],
    )
