"""The two variety data models, their validation and seeded constructors.

Storage conventions:

* ``b[a, p, q]``  = b^a_{pq}  (symmetric in p, q)
* ``c[a, p, q]``  = c^p_{aq}  (upper index p first, so ``c[a]`` is the matrix C_a)
* ``lten[p, q]``  = l_{pq}
* ``b_alpha[alpha, p, q]`` = b^alpha_{pq} for degenerate-Gauss data
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np

from config.settings import DEFAULT_TOLERANCE
from services.errors import InvalidRanges, NotValidated, ShapeMismatch
from services.tensors import (
    AxisClass,
    IndexRanges,
    ScalarKind,
    SmallTensor,
    exact_inverse,
    identity,
    inverse,
    is_zero_array,
    max_abs,
    zeros,
)

logger = logging.getLogger(__name__)

N, P, H = AxisClass.NORMAL, AxisClass.TANGENT, AxisClass.HYPERPLANE


class Ambient(str, Enum):
    PROJECTIVE = "projective"
    AFFINE = "affine"
    EUCLIDEAN = "euclidean"

    @property
    def is_affine(self) -> bool:
        """Euclidean space is an affine space with a metric."""
        return self is not Ambient.PROJECTIVE


@dataclass(frozen=True, eq=False)
class FundamentalTensors:
    ranges: IndexRanges
    ambient: Ambient
    b: SmallTensor
    c: SmallTensor
    lten: SmallTensor
    g_normal: SmallTensor | None = None
    g_tangent: SmallTensor | None = None

    @property
    def kind(self) -> ScalarKind:
        return self.b.kind

    @classmethod
    def build(
        cls,
        ambient: Ambient | str,
        n: int,
        r: int,
        b: Any,
        c: Any,
        lten: Any = None,
        g_normal: Any = None,
        g_tangent: Any = None,
        kind: ScalarKind = ScalarKind.EXACT,
    ) -> "FundamentalTensors":
        """Assemble tensors from nested sequences; a missing l means l = 0."""
        ranges = IndexRanges(n, r)
        if lten is None:
            lten = zeros((r, r), kind)
        return cls(
            ranges=ranges,
            ambient=Ambient(ambient),
            b=SmallTensor.build(b, (N, P, P), kind, [(1, 2)]),
            c=SmallTensor.build(c, (N, P, P), kind),
            lten=SmallTensor.build(lten, (P, P), kind),
            g_normal=None if g_normal is None else SmallTensor.build(g_normal, (N, N), kind, [(0, 1)]),
            g_tangent=None if g_tangent is None else SmallTensor.build(g_tangent, (P, P), kind, [(0, 1)]),
        )


@dataclass(frozen=True, eq=False)
class DegenerateGaussTensors:
    """Second fundamental forms B^alpha and the matrices C_a of a leaf-foliated variety.

    C_0 is the identity and is never stored.
    """

    ranges: IndexRanges
    b_alpha: SmallTensor
    c_a: SmallTensor

    @property
    def kind(self) -> ScalarKind:
        return self.b_alpha.kind

    @classmethod
    def build(
        cls,
        n: int,
        r: int,
        big_n: int,
        b_alpha: Any,
        c_a: Any,
        kind: ScalarKind = ScalarKind.EXACT,
    ) -> "DegenerateGaussTensors":
        return cls(
            ranges=IndexRanges(n, r, big_n),
            b_alpha=SmallTensor.build(b_alpha, (H, P, P), kind, [(1, 2)]),
            c_a=SmallTensor.build(c_a, (N, P, P), kind),
        )

    def c_matrices(self) -> list[np.ndarray]:
        """C_0 = identity followed by C_1 ... C_l."""
        return [identity(self.ranges.r, self.kind)] + [
            self.c_a.data[a] for a in range(self.ranges.l)
        ]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[str, ...] = ()
    details: tuple[str, ...] = ()


def _differs(left: np.ndarray, right: np.ndarray, kind: ScalarKind, tolerance: float) -> bool:
    if kind is ScalarKind.EXACT:
        return not bool(np.all(left == right))
    scale = max(1.0, max_abs(left), max_abs(right))
    return max_abs(left - right) >= tolerance * scale


def _check_kinds(*tensors: SmallTensor | None) -> None:
    kinds = {t.kind for t in tensors if t is not None}
    if len(kinds) > 1:
        raise ShapeMismatch("exact and float tensors cannot be mixed in one variety")


def metric_compatible_c(
    b: np.ndarray, g_normal: np.ndarray, g_tangent_inverse: np.ndarray
) -> np.ndarray:
    """c^p_{as} = -g^{pq} g_{ac} b^c_{qs}, returned in c[a, p, s] layout."""
    lowered = np.tensordot(g_normal, b, axes=(1, 0))  # (a, q, s)
    raised = np.tensordot(g_tangent_inverse, lowered, axes=(1, 1))  # (p, a, s)
    return -np.transpose(raised, (1, 0, 2))


def validate_normalized(
    data: FundamentalTensors, tolerance: float | None = None
) -> ValidationReport:
    """Check every structural identity a normalized variety must satisfy.

    Raises ShapeMismatch for inconsistent extents and SingularMetric when a
    Euclidean metric cannot be inverted; all other problems are reported.
    """
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    ranges = data.ranges
    _check_kinds(data.b, data.c, data.lten, data.g_normal, data.g_tangent)
    data.b.check_extents(ranges, "b")
    data.c.check_extents(ranges, "c")
    data.lten.check_extents(ranges, "l")
    if data.g_normal is not None:
        data.g_normal.check_extents(ranges, "g_normal")
    if data.g_tangent is not None:
        data.g_tangent.check_extents(ranges, "g_tangent")

    kind = data.kind
    violations: list[str] = []
    details: list[str] = []

    if _differs(data.b.data, np.swapaxes(data.b.data, 1, 2), kind, tolerance):
        violations.append("b-symmetry")
        details.append("b^a_pq is not symmetric in p, q")

    if data.ambient.is_affine and not is_zero_array(data.lten.data, kind, tolerance):
        violations.append("Eq. 50 (affine-l-vanishes)")
        details.append("affine normalization requires l_pq = 0")

    if data.ambient is Ambient.EUCLIDEAN:
        if data.g_normal is None or data.g_tangent is None:
            violations.append("metric-missing")
            details.append("euclidean data needs both g_ab and g_pq")
        else:
            for name, metric in (("g_ab", data.g_normal), ("g_pq", data.g_tangent)):
                if _differs(metric.data, metric.data.T, kind, tolerance):
                    violations.append("metric-symmetry")
                    details.append(f"{name} is not symmetric")
            inverse(data.g_normal.data, kind)
            expected = metric_compatible_c(
                data.b.data, data.g_normal.data, inverse(data.g_tangent.data, kind)
            )
            if _differs(data.c.data, expected, kind, tolerance):
                violations.append("Eq. 64 (c-metric-compatibility)")
                details.append("c^p_as differs from -g^pq g_ac b^c_qs")

    if violations:
        logger.info("normalized data failed validation: %s", ", ".join(violations))
    return ValidationReport(not violations, tuple(violations), tuple(details))


def validate_degenerate_gauss(
    data: DegenerateGaussTensors, tolerance: float | None = None
) -> ValidationReport:
    """Every product H = B^alpha C_i (C_0 = identity) must be symmetric."""
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    if data.ranges.big_n is None:
        raise ShapeMismatch("degenerate-Gauss data needs bigN")
    _check_kinds(data.b_alpha, data.c_a)
    data.b_alpha.check_extents(data.ranges, "b_alpha")
    data.c_a.check_extents(data.ranges, "c_a")

    kind = data.kind
    violations: list[str] = []
    details: list[str] = []
    if _differs(data.b_alpha.data, np.swapaxes(data.b_alpha.data, 1, 2), kind, tolerance):
        violations.append("b-symmetry")
        details.append("b^alpha_pq is not symmetric in p, q")
    for alpha in range(data.ranges.hyperplanes):
        for i, c_matrix in enumerate(data.c_matrices()):
            product = np.dot(data.b_alpha.data[alpha], c_matrix)
            if _differs(product, product.T, kind, tolerance):
                details.append(f"B^{alpha} C_{i} is not symmetric")
    if len(details) > len(violations):
        violations.append("h-symmetry")

    if violations:
        logger.info("degenerate-Gauss data failed validation: %s", ", ".join(violations))
    return ValidationReport(not violations, tuple(violations), tuple(details))


def ensure_valid(
    data: FundamentalTensors | DegenerateGaussTensors, tolerance: float | None = None
) -> None:
    if isinstance(data, DegenerateGaussTensors):
        report = validate_degenerate_gauss(data, tolerance)
    else:
        report = validate_normalized(data, tolerance)
    if not report.passed:
        raise NotValidated(list(report.violations))


# Seeded constructors. All of them produce exact rational data.


def _integers(rng: np.random.Generator, shape, low: int = -3, high: int = 3) -> np.ndarray:
    values = rng.integers(low, high + 1, size=shape)
    return np.vectorize(lambda x: Fraction(int(x)), otypes=[object])(values)


def _symmetric(rng: np.random.Generator, count: int, size: int) -> np.ndarray:
    raw = _integers(rng, (count, size, size))
    return raw + np.swapaxes(raw, 1, 2)


def _positive_definite(rng: np.random.Generator, size: int) -> np.ndarray:
    raw = _integers(rng, (size, size), -2, 2)
    return np.dot(raw.T, raw) + identity(size, ScalarKind.EXACT)


def rational_orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Cayley transform (I - S)(I + S)^-1 of a random skew matrix S."""
    skew = zeros((size, size), ScalarKind.EXACT)
    for i in range(size):
        for j in range(i + 1, size):
            value = Fraction(int(rng.integers(1, 4)), int(rng.integers(1, 3)))
            skew[i, j], skew[j, i] = value, -value
    eye = identity(size, ScalarKind.EXACT)
    return np.dot(eye - skew, exact_inverse(eye + skew))


def _conjugated_diagonals(rng: np.random.Generator, count: int, basis: np.ndarray) -> np.ndarray:
    size = basis.shape[0]
    out = zeros((count, size, size), ScalarKind.EXACT)
    for k in range(count):
        diagonal = zeros((size, size), ScalarKind.EXACT)
        for i in range(size):
            diagonal[i, i] = Fraction(int(rng.integers(-4, 5)))
        out[k] = np.dot(np.dot(basis, diagonal), basis.T)
    return out


def random_instance(ranges: IndexRanges, ambient: Ambient | str, seed: int) -> FundamentalTensors:
    """Deterministic random normalized variety that passes validation."""
    ambient = Ambient(ambient)
    rng = np.random.default_rng(seed)
    n, r, l = ranges.n, ranges.r, ranges.l
    b = _symmetric(rng, l, r)
    kind = ScalarKind.EXACT
    if ambient is Ambient.EUCLIDEAN:
        g_normal = _positive_definite(rng, l)
        g_tangent = _positive_definite(rng, r)
        c = metric_compatible_c(b, g_normal, exact_inverse(g_tangent))
        return FundamentalTensors.build(ambient, n, r, b, c, None, g_normal, g_tangent, kind)
    c = _integers(rng, (l, r, r))
    lten = _integers(rng, (r, r)) if ambient is Ambient.PROJECTIVE else None
    return FundamentalTensors.build(ambient, n, r, b, c, lten, kind=kind)


def central_instance(ranges: IndexRanges, seed: int) -> FundamentalTensors:
    rng = np.random.default_rng(seed)
    b = _symmetric(rng, ranges.l, ranges.r)
    c = zeros((ranges.l, ranges.r, ranges.r), ScalarKind.EXACT)
    return FundamentalTensors.build(Ambient.PROJECTIVE, ranges.n, ranges.r, b, c)


def flat_normal_instance(
    ranges: IndexRanges, ambient: Ambient | str, seed: int
) -> FundamentalTensors:
    """Variety whose B^a and C_b are diagonal in one rational orthonormal basis.

    Every product B^a C_b is then symmetric and the C_b pairwise commute.
    """
    ambient = Ambient(ambient)
    rng = np.random.default_rng(seed)
    n, r, l = ranges.n, ranges.r, ranges.l
    basis = rational_orthogonal(rng, r)
    b = _conjugated_diagonals(rng, l, basis)
    if ambient is Ambient.EUCLIDEAN:
        eye_n, eye_t = identity(l, ScalarKind.EXACT), identity(r, ScalarKind.EXACT)
        return FundamentalTensors.build(ambient, n, r, b, -b, None, eye_n, eye_t)
    c = _conjugated_diagonals(rng, l, basis)
    lten = _integers(rng, (r, r)) if ambient is Ambient.PROJECTIVE else None
    return FundamentalTensors.build(ambient, n, r, b, c, lten)


def flat_hypersurface_instance(n: int, seed: int) -> FundamentalTensors:
    """Affine hypersurface with b = v v^T and c^p_t = w^p v_t (flat tangential connection)."""
    rng = np.random.default_rng(seed)
    r = n - 1
    v = _integers(rng, (r,))
    w = _integers(rng, (r,))
    b = np.outer(v, v).reshape(1, r, r)
    c = np.outer(w, v).reshape(1, r, r)
    return FundamentalTensors.build(Ambient.AFFINE, n, r, b, c)


def degenerate_gauss_instance(ranges: IndexRanges, seed: int) -> DegenerateGaussTensors:
    """Symmetric B^alpha commuting with symmetric C_a (common orthonormal eigenbasis)."""
    if ranges.big_n is None:
        raise InvalidRanges("degenerate-Gauss data needs bigN")
    rng = np.random.default_rng(seed)
    basis = rational_orthogonal(rng, ranges.r)
    b_alpha = _conjugated_diagonals(rng, ranges.hyperplanes, basis)
    c_a = _conjugated_diagonals(rng, ranges.l, basis)
    return DegenerateGaussTensors.build(
        ranges.n, ranges.r, ranges.big_n, b_alpha, c_a
    )
