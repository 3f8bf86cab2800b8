"""Explicit Euclidean immersions and the frame data extracted from them."""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from services.errors import (
    DomainError,
    ExpressionSyntaxError,
    InputError,
    InvalidRanges,
    RankDeficient,
)
from services.expressions import (
    CONSTANTS,
    FUNCTIONS,
    Expr,
    Parser,
    evaluate,
    parse_expression,
    render,
    tokenize,
)
from services.jets import ArrayJet, Jet
from services.tensors import ScalarKind
from services.varieties import Ambient, FundamentalTensors

logger = logging.getLogger(__name__)

RANK_RATIO = 1e-10
NORMAL_THRESHOLD = 1e-8
DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class ImmersionSpec:
    params: tuple[str, ...]
    components: tuple[Expr, ...]
    domain: tuple[tuple[float, float], ...]

    @property
    def r(self) -> int:
        return len(self.params)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def centre(self) -> np.ndarray:
        return np.array([(lo + hi) / 2 for lo, hi in self.domain])

    @classmethod
    def build(
        cls,
        params: Sequence[str],
        components: Sequence[str | Expr],
        domain: Sequence[Sequence[float]],
    ) -> "ImmersionSpec":
        params = tuple(params)
        for name in params:
            if name in FUNCTIONS or name in CONSTANTS:
                raise InputError(f"{name!r} is reserved and cannot name a parameter")
        if len(set(params)) != len(params):
            raise InputError("parameter names must be distinct")
        parsed = tuple(
            c if not isinstance(c, str) else parse_expression(c, params, line=k + 1)
            for k, c in enumerate(components)
        )
        if not 1 <= len(params) < len(parsed):
            raise InvalidRanges(
                f"need 1 <= r < n, got r={len(params)} parameters and n={len(parsed)} components"
            )
        if len(domain) != len(params):
            raise InputError(f"expected {len(params)} domain intervals, got {len(domain)}")
        box = tuple((float(lo), float(hi)) for lo, hi in domain)
        for lo, hi in box:
            if not lo < hi:
                raise InputError(f"empty domain interval [{lo}, {hi}]")
        spec = cls(params, parsed, box)
        _check_rank(spec, evaluate_jet2(spec, spec.centre).first)
        return spec

    def component_sources(self) -> list[str]:
        return [render(c) for c in self.components]

    def contains(self, u: Sequence[float]) -> bool:
        return all(
            lo - DOMAIN_SLACK * (hi - lo) <= x <= hi + DOMAIN_SLACK * (hi - lo)
            for x, (lo, hi) in zip(u, self.domain)
        )


def _split_line(raw: str, number: int) -> tuple[str, str, int]:
    if ":" not in raw:
        raise ExpressionSyntaxError("expected 'key: value'", number, 1)
    key, _, rest = raw.partition(":")
    return key.strip().lower(), rest, len(key) + 2


def parse_immersion(text: str) -> ImmersionSpec:
    """Read the ``params:`` / ``components:`` / ``domain:`` text format.

    Blank lines and lines starting with ``#`` are ignored. Domain bounds may
    be constant expressions such as ``-pi/2``.
    """
    sections: dict[str, tuple[str, int, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        key, rest, column = _split_line(raw, number)
        if key not in ("params", "components", "domain"):
            raise InputError(f"unknown section {key!r}", number, 1)
        if key in sections:
            raise InputError(f"section {key!r} given twice", number, 1)
        sections[key] = (rest, number, column)
    for key in ("params", "components", "domain"):
        if key not in sections:
            raise InputError(f"missing section {key!r}")

    rest, number, column = sections["params"]
    params = []
    for token in tokenize(rest, number, column)[:-1]:
        if token.text == ",":
            continue
        if token.kind != "name":
            raise ExpressionSyntaxError(f"expected a parameter name, found {token.text!r}", token.line, token.column)
        params.append(token.text)

    rest, number, column = sections["components"]
    components = Parser.from_text(rest, params, number, column).expression_list()

    rest, number, column = sections["domain"]
    parser = Parser.from_text(rest, (), number, column)
    domain = []
    while True:
        opening = parser.expect("[")
        bounds = parser.expression_list(terminators=("]",))
        parser.expect("]")
        if len(bounds) != 2:
            raise InputError("a domain interval needs two bounds", opening.line, opening.column)
        lo, hi = bounds
        domain.append((evaluate(lo, {}), evaluate(hi, {})))
        if parser.at_end():
            break
        parser.expect(",")
    return ImmersionSpec.build(params, components, domain)


@dataclass(frozen=True)
class Jet2:
    value: np.ndarray  # (n,)
    first: np.ndarray  # (n, r)
    second: np.ndarray  # (n, r, r)


def _point(spec: ImmersionSpec, u: Sequence[float]) -> np.ndarray:
    point = np.asarray(u, dtype=float)
    if point.shape != (spec.r,):
        raise InputError(f"expected a point with {spec.r} coordinates, got {list(point.shape)}")
    if not spec.contains(point):
        raise DomainError(f"point {point.tolist()} lies outside the domain box")
    return point


def evaluate_jet2(spec: ImmersionSpec, u: Sequence[float]) -> Jet2:
    point = _point(spec, u)
    env = {name: Jet.variable(x, i, spec.r) for i, (name, x) in enumerate(zip(spec.params, point))}
    value, first, second = np.zeros(spec.n), np.zeros((spec.n, spec.r)), np.zeros((spec.n, spec.r, spec.r))
    for i, component in enumerate(spec.components):
        result = evaluate(component, env)
        if isinstance(result, Jet):
            value[i], first[i], second[i] = result.val, result.grad, result.hess
        else:
            value[i] = result
    return Jet2(value, first, second)


def _check_rank(spec: ImmersionSpec, first: np.ndarray) -> None:
    singular = np.linalg.svd(first, compute_uv=False)
    if singular[0] == 0.0 or singular[-1] / singular[0] < RANK_RATIO:
        raise RankDeficient(f"the Jacobian has rank below {spec.r}")


def normal_frame(tangent: ArrayJet) -> ArrayJet:
    """Orthonormal frame of the normal space, differentiated along the parameters.

    The standard basis vectors projected onto the normal space are
    orthonormalized in index order; projections shorter than 1e-8 are skipped.
    """
    n, r = tangent.value.shape
    gram = tangent.T @ tangent
    projector = np.eye(n) - tangent @ gram.inv() @ tangent.T
    frame: list[ArrayJet] = []
    for i in range(n):
        if len(frame) == n - r:
            break
        vector = projector[:, i]
        for previous in frame:
            vector = vector - previous.dot(vector) * previous
        length = float(np.linalg.norm(vector.value))
        if length < NORMAL_THRESHOLD:
            continue
        frame.append(vector / vector.norm())
    if len(frame) != n - r:
        raise RankDeficient("could not complete the normal frame")
    return ArrayJet(
        np.stack([v.value for v in frame], axis=1),
        np.stack([v.tangent for v in frame], axis=1),
    )


@dataclass(frozen=True)
class FrameData:
    """Euclidean moving frame at one parameter point.

    Tensors are stored with the library index order: ``b[a, p, q]``,
    ``c[a, p, q] = c^p_{aq}``, ``christoffel[p, q, s] = Gamma^p_{qs}`` and
    ``normal_connection[a, b, s] = gamma^a_{bs}``.
    """

    point: np.ndarray
    base_point: np.ndarray
    tangent: np.ndarray  # columns A_p
    normal: np.ndarray  # columns A_a
    normal_derivatives: np.ndarray  # [:, a, s] = d A_a / d u^s
    g_tangent: np.ndarray
    g_normal: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lten: np.ndarray
    christoffel: np.ndarray
    normal_connection: np.ndarray
    second: np.ndarray = field(repr=False)

    @property
    def r(self) -> int:
        return self.tangent.shape[1]

    @property
    def n(self) -> int:
        return self.tangent.shape[0]

    def fundamental_tensors(self) -> FundamentalTensors:
        return FundamentalTensors.build(
            Ambient.EUCLIDEAN,
            self.n,
            self.r,
            self.b,
            self.c,
            self.lten,
            self.g_normal,
            self.g_tangent,
            kind=ScalarKind.FLOAT,
        )


def _christoffel(jet: Jet2) -> np.ndarray:
    g_inverse = np.linalg.inv(jet.first.T @ jet.first)
    return np.einsum("pu,iu,iqs->pqs", g_inverse, jet.first, jet.second)


def christoffel_symbols(spec: ImmersionSpec, u: Sequence[float]) -> np.ndarray:
    """Gamma^p_{qs} alone, without building the normal frame."""
    jet = evaluate_jet2(spec, u)
    _check_rank(spec, jet.first)
    return _christoffel(jet)


def extract_frames(spec: ImmersionSpec, u: Sequence[float]) -> FrameData:
    jet = evaluate_jet2(spec, u)
    _check_rank(spec, jet.first)
    n, r = spec.n, spec.r
    frames = normal_frame(ArrayJet(jet.first, jet.second))
    normal, normal_derivatives = frames.value, frames.tangent
    g_tangent = jet.first.T @ jet.first
    g_inverse = np.linalg.inv(g_tangent)
    b = np.einsum("ia,ipq->apq", normal, jet.second)
    c = -np.einsum("pu,auq->apq", g_inverse, b)
    christoffel = _christoffel(jet)
    normal_connection = np.einsum("ia,ibs->abs", normal, normal_derivatives)
    return FrameData(
        point=np.asarray(u, dtype=float),
        base_point=jet.value,
        tangent=jet.first,
        normal=normal,
        normal_derivatives=normal_derivatives,
        g_tangent=g_tangent,
        g_normal=np.eye(n - r),
        b=b,
        c=c,
        lten=np.zeros((r, r)),
        christoffel=christoffel,
        normal_connection=normal_connection,
        second=jet.second,
    )


def connection_coefficients(spec: ImmersionSpec, u: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """(Gamma^p_{qs}, gamma^a_{bs}) of the induced tangential and normal connections."""
    frames = extract_frames(spec, u)
    return frames.christoffel, frames.normal_connection


def intrinsic_riemann(spec: ImmersionSpec, u: Sequence[float], step: float = 1e-4) -> np.ndarray:
    """R^p_{qst} from the Christoffel symbols and their central differences."""
    point = np.asarray(u, dtype=float)
    gamma = christoffel_symbols(spec, point)
    r = spec.r
    derivative = np.zeros((r, r, r, r))  # [p, q, t, s] = d_s Gamma^p_{qt}
    for s in range(r):
        offset = np.zeros(r)
        offset[s] = step
        forward = christoffel_symbols(spec, point + offset)
        backward = christoffel_symbols(spec, point - offset)
        derivative[..., s] = (forward - backward) / (2 * step)
    d_s_gamma_t = np.transpose(derivative, (0, 1, 3, 2))  # [p, q, s, t] = d_s Gamma^p_{qt}
    quadratic = np.einsum("pus,uqt->pqst", gamma, gamma)
    return d_s_gamma_t - np.swapaxes(d_s_gamma_t, 2, 3) + quadratic - np.swapaxes(quadratic, 2, 3)
