"""Curvature of the induced tangential and normal connections."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from config.settings import DEFAULT_TOLERANCE
from services.errors import InconsistentResult, ShapeMismatch, WrongAmbient
from services.tensors import (
    AxisClass,
    ScalarKind,
    SmallTensor,
    identity,
    is_zero_array,
    to_exact,
)
from services.varieties import (
    Ambient,
    DegenerateGaussTensors,
    FundamentalTensors,
    ensure_valid,
)

logger = logging.getLogger(__name__)

N, P = AxisClass.NORMAL, AxisClass.TANGENT


@dataclass(frozen=True)
class CurvatureTensors:
    r_t: SmallTensor  # R^p_{qst} as [p, q, s, t]
    r_n: SmallTensor  # R^a_{bst} as [a, b, s, t]
    ric_t: SmallTensor
    ric_n: SmallTensor


class NormalizationTag(str, Enum):
    CENTRAL = "central"
    TRIVIAL = "trivial"
    CENTRAL_AFFINE = "central-affine-atanasyan"
    GENERAL = "general"


@dataclass(frozen=True)
class NormalizationClass:
    tag: NormalizationTag
    witness: tuple | None = None


@dataclass(frozen=True)
class FlatnessReport:
    tangential_flat: bool
    normal_flat: bool
    products_symmetric: bool


def _antisymmetrize_last(array: np.ndarray) -> np.ndarray:
    return array - np.swapaxes(array, 2, 3)


def tangential_curvature(
    data: FundamentalTensors, tolerance: float | None = None
) -> SmallTensor:
    """R^p_{qst} = l_qs d^p_t + b^a_qs c^p_at - (s <-> t).

    Affine and Euclidean data carry l = 0, which leaves only the b c terms.
    """
    ensure_valid(data, tolerance)
    r, kind = data.ranges.r, data.kind
    b, c, lten = data.b.data, data.c.data, data.lten.data
    bc = np.transpose(np.tensordot(b, c, axes=(0, 0)), (2, 0, 1, 3))
    ld = np.transpose(np.multiply.outer(lten, identity(r, kind)), (2, 0, 1, 3))
    return SmallTensor((P, P, P, P), _antisymmetrize_last(ld + bc), kind, ())


def lowered_curvature(data: FundamentalTensors, tolerance: float | None = None) -> SmallTensor:
    """All-lower R_pqst = g_ac (b^a_ps b^c_qt - b^a_pt b^c_qs) of Euclidean data."""
    if data.ambient is not Ambient.EUCLIDEAN:
        raise WrongAmbient("the lowered curvature needs a Euclidean metric")
    ensure_valid(data, tolerance)
    b = data.b.data
    gb = np.tensordot(data.g_normal.data, b, axes=(1, 0))
    product = np.transpose(np.tensordot(b, gb, axes=(0, 0)), (0, 2, 1, 3))
    return SmallTensor((P, P, P, P), _antisymmetrize_last(product), data.kind, ())


def sectional_curvature(
    data: FundamentalTensors, s: int = 0, t: int = 1, tolerance: float | None = None
):
    lowered = lowered_curvature(data, tolerance).data
    g = data.g_tangent.data
    area = g[s, s] * g[t, t] - g[s, t] * g[t, s]
    return lowered[s, t, s, t] / area


def normal_curvature(data: FundamentalTensors, tolerance: float | None = None) -> SmallTensor:
    """R^a_{bst} = c^p_bs b^a_pt - c^p_bt b^a_ps."""
    ensure_valid(data, tolerance)
    product = np.tensordot(data.c.data, data.b.data, axes=(1, 1))  # (b, s, a, t)
    product = np.transpose(product, (2, 0, 1, 3))
    return SmallTensor((N, N, P, P), _antisymmetrize_last(product), data.kind, ())


def _trace_first_pair(tensor: SmallTensor) -> SmallTensor:
    size = tensor.shape[0]
    total = sum((tensor.data[k, k] for k in range(1, size)), tensor.data[0, 0])
    return SmallTensor(tensor.axes[2:], total, tensor.kind, ())


def curvature_tensors(data: FundamentalTensors, tolerance: float | None = None) -> CurvatureTensors:
    r_t = tangential_curvature(data, tolerance)
    r_n = normal_curvature(data, tolerance)
    return CurvatureTensors(r_t, r_n, _trace_first_pair(r_t), _trace_first_pair(r_n))


def ricci_pair(
    data: FundamentalTensors, tolerance: float | None = None
) -> tuple[SmallTensor, SmallTensor]:
    """Ricci-type tensors of both connections, contracted over p = q and a = b."""
    if not data.ambient.is_affine and not is_zero_array(
        data.lten.data, data.kind, tolerance or DEFAULT_TOLERANCE
    ):
        raise WrongAmbient("Ricci-type identities hold for affine normalizations only")
    ensure_valid(data, tolerance)
    product = np.tensordot(data.b.data, data.c.data, axes=([0, 1], [0, 1]))  # (s, t)
    ric_t = product - product.T
    ric_n = product.T - product
    return (
        SmallTensor((P, P), ric_t, data.kind, ()),
        SmallTensor((P, P), ric_n, data.kind, ()),
    )


def flatness_report(data: FundamentalTensors, tolerance: float | None = None) -> FlatnessReport:
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    r_t = tangential_curvature(data, tolerance)
    r_n = normal_curvature(data, tolerance)
    condition = True
    for a in range(data.ranges.l):
        for bb in range(data.ranges.l):
            product = np.dot(data.b.data[a], data.c.data[bb])
            if not is_zero_array(product - product.T, data.kind, tolerance):
                condition = False
    report = FlatnessReport(
        tangential_flat=r_t.is_zero(tolerance),
        normal_flat=r_n.is_zero(tolerance),
        products_symmetric=condition,
    )
    if report.normal_flat != report.products_symmetric:
        raise InconsistentResult(
            "normal flatness and symmetry of every B^a C_b disagree"
        )
    return report


def classify_normalization(
    data: FundamentalTensors, tolerance: float | None = None
) -> NormalizationClass:
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    kind, r = data.kind, data.ranges.r
    c = data.c.data
    c_zero = is_zero_array(c, kind, tolerance)
    if c_zero and data.ambient.is_affine:
        return NormalizationClass(NormalizationTag.TRIVIAL)
    if c_zero and is_zero_array(data.lten.data, kind, tolerance):
        return NormalizationClass(NormalizationTag.CENTRAL)
    if data.ambient.is_affine:
        eye = identity(r, kind)
        factors = tuple(c[a, 0, 0] for a in range(data.ranges.l))
        if all(
            is_zero_array(c[a] - factors[a] * eye, kind, tolerance)
            for a in range(data.ranges.l)
        ):
            return NormalizationClass(NormalizationTag.CENTRAL_AFFINE, factors)
    return NormalizationClass(NormalizationTag.GENERAL)


def second_fundamental_form(
    data: FundamentalTensors | DegenerateGaussTensors,
    xi: Sequence,
    w: Sequence,
    generator_point: Sequence | None = None,
):
    """Evaluate xi_alpha b^alpha_pq w^p w^q, optionally displaced to a generator point.

    At the generator point (x0, x^a) the form becomes
    xi_alpha b^alpha_ps (d^s_q x0 + c^s_aq x^a) w^p w^q.
    """
    if isinstance(data, DegenerateGaussTensors):
        forms, c = data.b_alpha.data, data.c_a.data
    else:
        forms, c = data.b.data, data.c.data
    kind, r, l = data.kind, data.ranges.r, data.ranges.l
    cast = to_exact if kind is ScalarKind.EXACT else float
    if len(xi) != forms.shape[0]:
        raise ShapeMismatch(f"expected {forms.shape[0]} hyperplane coordinates, got {len(xi)}")
    if len(w) != r:
        raise ShapeMismatch(f"expected {r} tangent components, got {len(w)}")
    xi_vec = np.array([cast(x) for x in xi], dtype=object if kind is ScalarKind.EXACT else float)
    w_vec = np.array([cast(x) for x in w], dtype=xi_vec.dtype)
    matrix = np.tensordot(xi_vec, forms, axes=(0, 0))
    if generator_point is not None:
        if len(generator_point) != l + 1:
            raise ShapeMismatch(f"expected {l + 1} generator coordinates, got {len(generator_point)}")
        x0, *xa = [cast(x) for x in generator_point]
        displacement = identity(r, kind) * x0
        for a, value in enumerate(xa):
            displacement = displacement + c[a] * value
        matrix = np.dot(matrix, displacement)
    value = np.dot(w_vec, np.dot(matrix, w_vec))
    if kind is ScalarKind.EXACT:
        return to_exact(value)
    return float(value)
