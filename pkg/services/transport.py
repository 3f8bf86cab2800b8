"""Parallel transport, holonomy and parallel normal fields on immersions."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from config.settings import DEFAULT_TOLERANCE
from services.curvature import normal_curvature, tangential_curvature
from services.errors import (
    InputError,
    NotClosed,
    NotFlat,
    PathDependence,
    PreconditionFailed,
    RankDeficientField,
    StepTooCoarse,
)
from services.expressions import BinOp, Const, Expr, Var, evaluate, parse_expression
from services.immersion import (
    FrameData,
    ImmersionSpec,
    christoffel_symbols,
    evaluate_jet2,
    extract_frames,
)
from services.jets import Jet

logger = logging.getLogger(__name__)

DRIFT_LIMIT = 0.1
CLOSURE_TOLERANCE = 1e-12
PATH_INDEPENDENCE_TOLERANCE = 1e-7
PARALLELISM_TOLERANCE = 1e-6
OFFSET_STEP = 1e-4
HOLONOMY_CONSTANT = 10.0


class Bundle(str, Enum):
    TANGENTIAL = "tangential"
    NORMAL = "normal"


# Paths.


@dataclass(frozen=True)
class PathSegment:
    """Curve u(t), t in [t0, t1], sampled with ``steps`` integration steps."""

    expressions: tuple[Expr, ...]
    interval: tuple[float, float]
    steps: int

    @classmethod
    def build(cls, expressions: Sequence[str | Expr], interval: Sequence[float], steps: int) -> "PathSegment":
        parsed = tuple(
            e if not isinstance(e, str) else parse_expression(e, ("t",)) for e in expressions
        )
        if steps < 2:
            raise InputError(f"a path segment needs at least 2 steps, got {steps}")
        t0, t1 = (float(x) for x in interval)
        return cls(parsed, (t0, t1), int(steps))

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Point u(t) and velocity du/dt."""
        env = {"t": Jet.variable(t, 0, 1)}
        point, velocity = np.zeros(len(self.expressions)), np.zeros(len(self.expressions))
        for i, expr in enumerate(self.expressions):
            value = evaluate(expr, env)
            if isinstance(value, Jet):
                point[i], velocity[i] = value.val, value.grad[0]
            else:
                point[i] = value
        return point, velocity

    def start(self) -> np.ndarray:
        return self.at(self.interval[0])[0]

    def end(self) -> np.ndarray:
        return self.at(self.interval[1])[0]


@dataclass(frozen=True)
class Rectangle:
    corner: tuple[float, ...]
    axes: tuple[int, int]
    eps: float
    delta: float

    @property
    def centre(self) -> np.ndarray:
        centre = np.array(self.corner, dtype=float)
        centre[self.axes[0]] += self.eps / 2
        centre[self.axes[1]] += self.delta / 2
        return centre


@dataclass(frozen=True)
class PathSpec:
    segments: tuple[PathSegment, ...]
    rectangle: Rectangle | None = None

    @property
    def dimension(self) -> int:
        return len(self.segments[0].expressions)

    @classmethod
    def single(cls, expressions: Sequence[str | Expr], interval: Sequence[float], steps: int) -> "PathSpec":
        return cls((PathSegment.build(expressions, interval, steps),))

    def is_closed(self, tolerance: float = CLOSURE_TOLERANCE) -> bool:
        return bool(np.max(np.abs(self.segments[0].start() - self.segments[-1].end())) <= tolerance)


def _linear(start: float, end: float) -> Expr:
    if start == end:
        return Const(float(start))
    return BinOp("+", Const(float(start)), BinOp("*", Const(float(end - start)), Var("t")))


def straight_segment(start: Sequence[float], end: Sequence[float], steps: int) -> PathSegment:
    """u(t) = start + t (end - start), t in [0, 1]."""
    return PathSegment(tuple(_linear(a, b) for a, b in zip(start, end)), (0.0, 1.0), steps)


def coordinate_rectangle(
    corner: Sequence[float],
    axes: tuple[int, int],
    eps: float,
    delta: float,
    steps: int,
) -> PathSpec:
    """Closed loop along axis s by eps, then axis t by delta, then back."""
    s, t = axes
    if s == t or not (0 <= s < len(corner) and 0 <= t < len(corner)):
        raise InputError(f"rectangle axes must be two distinct parameter indices, got {axes}")
    p0 = np.array(corner, dtype=float)
    p1, p2, p3 = p0.copy(), p0.copy(), p0.copy()
    p1[s] += eps
    p2[s] += eps
    p2[t] += delta
    p3[t] += delta
    corners = [p0, p1, p2, p3, p0]
    segments = tuple(straight_segment(a, b, steps) for a, b in zip(corners, corners[1:]))
    return PathSpec(segments, Rectangle(tuple(float(x) for x in corner), (s, t), float(eps), float(delta)))


# Integration.


@dataclass(frozen=True)
class LogEntry:
    segment: int
    t: float
    components: tuple[float, ...]


@dataclass(frozen=True)
class TransportResult:
    final: np.ndarray
    log: tuple[LogEntry, ...]
    drift: float
    matrix: np.ndarray


def _coefficients(spec: ImmersionSpec, bundle: Bundle) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Matrix A(u, du) with dx/dt = -A x along the curve."""
    if bundle is Bundle.TANGENTIAL:
        return lambda u, du: np.einsum("pqs,s->pq", christoffel_symbols(spec, u), du)
    return lambda u, du: np.einsum("abs,s->ab", extract_frames(spec, u).normal_connection, du)


def _bundle_rank(spec: ImmersionSpec, bundle: Bundle) -> int:
    return spec.r if bundle is Bundle.TANGENTIAL else spec.n - spec.r


def _check_path(spec: ImmersionSpec, path: PathSpec) -> None:
    for segment in path.segments:
        if len(segment.expressions) != spec.r:
            raise InputError(
                f"path has {len(segment.expressions)} coordinates, the immersion has {spec.r} parameters"
            )


def _integrate(
    spec: ImmersionSpec, path: PathSpec, bundle: Bundle
) -> tuple[np.ndarray, list[tuple[int, float, np.ndarray]]]:
    """Classical fourth-order Runge-Kutta on the transport matrix."""
    _check_path(spec, path)
    coefficients = _coefficients(spec, bundle)
    size = _bundle_rank(spec, bundle)
    matrix = np.eye(size)
    states = []
    for index, segment in enumerate(path.segments):
        t0, t1 = segment.interval
        h = (t1 - t0) / segment.steps
        current = coefficients(*segment.at(t0))
        if index == 0:
            states.append((index, t0, matrix.copy()))
        for k in range(segment.steps):
            t = t0 + k * h
            middle = coefficients(*segment.at(t + h / 2))
            following = coefficients(*segment.at(t + h))
            k1 = -current @ matrix
            k2 = -middle @ (matrix + h / 2 * k1)
            k3 = -middle @ (matrix + h / 2 * k2)
            k4 = -following @ (matrix + h * k3)
            matrix = matrix + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            states.append((index, t + h, matrix.copy()))
            current = following
    return matrix, states


def _norm(spec: ImmersionSpec, bundle: Bundle, u: np.ndarray, vector: np.ndarray) -> float:
    if bundle is Bundle.NORMAL:
        return float(np.linalg.norm(vector))
    first = evaluate_jet2(spec, u).first
    return float(np.sqrt(vector @ (first.T @ first) @ vector))


def _transport(spec: ImmersionSpec, path: PathSpec, vector: Sequence[float], bundle: Bundle) -> TransportResult:
    v0 = np.asarray(vector, dtype=float)
    if v0.shape != (_bundle_rank(spec, bundle),):
        raise InputError(
            f"expected {_bundle_rank(spec, bundle)} {bundle.value} components, got {list(v0.shape)}"
        )
    matrix, states = _integrate(spec, path, bundle)
    final = matrix @ v0
    log = tuple(LogEntry(i, t, tuple(float(x) for x in m @ v0)) for i, t, m in states)
    start_norm = _norm(spec, bundle, path.segments[0].start(), v0)
    drift = 0.0
    if start_norm > 0.0:
        end_norm = _norm(spec, bundle, path.segments[-1].end(), final)
        drift = abs(end_norm - start_norm) / start_norm
    if drift > 1e-6:
        logger.debug("%s transport drifted by %.3e", bundle.value, drift)
    if drift > DRIFT_LIMIT:
        raise StepTooCoarse(f"{bundle.value} transport changed the vector norm by {drift:.3g}")
    return TransportResult(final=final, log=log, drift=drift, matrix=matrix)


def transport_tangent(spec: ImmersionSpec, path: PathSpec, v0: Sequence[float]) -> TransportResult:
    """Solve dx^p + x^q Gamma^p_{qs} du^s = 0 along the path."""
    return _transport(spec, path, v0, Bundle.TANGENTIAL)


def transport_normal(spec: ImmersionSpec, path: PathSpec, y0: Sequence[float]) -> TransportResult:
    """Solve dy^a + y^b gamma^a_{bs} du^s = 0 along the path."""
    return _transport(spec, path, y0, Bundle.NORMAL)


# Holonomy.


@dataclass(frozen=True)
class HolonomyResult:
    bundle: Bundle
    matrix: np.ndarray
    prediction: np.ndarray | None
    residual: float | None
    bound: float | None
    consistent: bool | None
    closure_defect: float
    rotation_angle: float | None


def _rotation_angle(matrix: np.ndarray, metric: np.ndarray) -> float | None:
    if matrix.shape != (2, 2):
        return None
    lower = np.linalg.cholesky(metric)
    orthonormal = lower.T @ matrix @ np.linalg.inv(lower.T)
    return float(np.arctan2(orthonormal[1, 0], orthonormal[0, 0]))


def holonomy_loop(
    spec: ImmersionSpec,
    loop: PathSpec,
    which: Bundle | str = Bundle.TANGENTIAL,
    tolerance: float | None = None,
) -> HolonomyResult:
    """Transport matrix around a closed loop.

    For a coordinate rectangle with sides eps along s and delta along t the
    matrix is compared with I - eps delta R_(s,t), the curvature taken at the
    rectangle centre; the difference must be O(eps delta (eps + delta)).
    """
    bundle = Bundle(which)
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    if not loop.is_closed():
        raise NotClosed("the loop does not return to its starting point")
    for before, after in zip(loop.segments, loop.segments[1:]):
        if np.max(np.abs(before.end() - after.start())) > CLOSURE_TOLERANCE:
            raise NotClosed("consecutive loop segments do not join")
    matrix, _ = _integrate(spec, loop, bundle)
    size = matrix.shape[0]
    start = loop.segments[0].start()
    metric = evaluate_jet2(spec, start).first if bundle is Bundle.TANGENTIAL else None
    metric = metric.T @ metric if metric is not None else np.eye(size)

    prediction = residual = bound = consistent = None
    if loop.rectangle is not None:
        rectangle = loop.rectangle
        data = extract_frames(spec, rectangle.centre).fundamental_tensors()
        if bundle is Bundle.TANGENTIAL:
            curvature = tangential_curvature(data, tolerance).data
        else:
            curvature = normal_curvature(data, tolerance).data
        s, t = rectangle.axes
        area = rectangle.eps * rectangle.delta
        prediction = np.eye(size) - area * curvature[:, :, s, t]
        residual = float(np.max(np.abs(matrix - prediction)))
        scale = 1.0 + float(np.max(np.abs(curvature), initial=0.0))
        bound = HOLONOMY_CONSTANT * scale**2 * area * (abs(rectangle.eps) + abs(rectangle.delta))
        consistent = residual <= bound
        logger.info("holonomy residual %.3e against bound %.3e", residual, bound)
    return HolonomyResult(
        bundle=bundle,
        matrix=matrix,
        prediction=prediction,
        residual=residual,
        bound=bound,
        consistent=consistent,
        closure_defect=float(np.max(np.abs(matrix - np.eye(size)))),
        rotation_angle=_rotation_angle(matrix, metric),
    )


# Grids and parallel varieties.


@dataclass(frozen=True)
class GridSpec:
    """Per-parameter (lo, hi, count) lattice."""

    axes: tuple[tuple[float, float, int], ...]

    @classmethod
    def build(cls, axes: Sequence[Sequence[float]]) -> "GridSpec":
        parsed = []
        for lo, hi, count in axes:
            if int(count) < 1:
                raise InputError(f"grid counts must be positive, got {count}")
            parsed.append((float(lo), float(hi), int(count)))
        return cls(tuple(parsed))

    @classmethod
    def middle(cls, spec: ImmersionSpec, count: int = 3) -> "GridSpec":
        """``count`` points per axis over the middle half of the domain box."""
        return cls(
            tuple((lo + (hi - lo) / 4, hi - (hi - lo) / 4, count) for lo, hi in spec.domain)
        )

    def coordinates(self, axis: int) -> np.ndarray:
        lo, hi, count = self.axes[axis]
        return np.linspace(lo, hi, count)

    def indices(self) -> list[tuple[int, ...]]:
        return list(np.ndindex(*(count for _, _, count in self.axes)))

    def point(self, index: Sequence[int]) -> np.ndarray:
        return np.array([self.coordinates(axis)[i] for axis, i in enumerate(index)])


def _check_grid(spec: ImmersionSpec, grid: GridSpec) -> None:
    if len(grid.axes) != spec.r:
        raise InputError(f"grid has {len(grid.axes)} axes, the immersion has {spec.r} parameters")


def _sweep(
    spec: ImmersionSpec,
    grid: GridSpec,
    y0: np.ndarray,
    order: Sequence[int],
    steps_per_cell: int,
) -> dict[tuple[int, ...], np.ndarray]:
    """Transport y0 from the first grid corner along the axes in ``order``."""
    base = (0,) * len(grid.axes)
    known = {base: y0}
    for axis in order:
        count = grid.axes[axis][2]
        if count == 1:
            continue
        swept = {}
        for index, value in known.items():
            start = grid.point(index)
            end = start.copy()
            end[axis] = grid.coordinates(axis)[-1]
            segment = straight_segment(start, end, steps_per_cell * (count - 1))
            _, states = _integrate(spec, PathSpec((segment,)), Bundle.NORMAL)
            for j in range(count):
                target = list(index)
                target[axis] = j
                swept[tuple(target)] = states[j * steps_per_cell][2] @ value
        known = swept
    return known


def _max_principal_angle(first: np.ndarray, second: np.ndarray) -> float:
    return float(np.max(scipy.linalg.subspace_angles(first, second)))


@dataclass(frozen=True)
class ParallelSample:
    parameters: tuple[float, ...]
    normal_components: tuple[float, ...]
    point: tuple[float, ...]
    tangent_angle: float


@dataclass(frozen=True)
class ParallelVarietyReport:
    samples: tuple[ParallelSample, ...]
    route_disagreement: float
    max_angle: float
    passed: bool


def _offset_point(spec: ImmersionSpec, w: np.ndarray, field: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    frames = extract_frames(spec, w)
    return frames.base_point + frames.normal @ np.asarray(field(w), dtype=float)


def _axis_derivative(
    spec: ImmersionSpec, u: np.ndarray, axis: int, step: float, value: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """Second-order difference along one parameter, one-sided at the edge of the domain box."""
    shift = np.zeros(spec.r)
    shift[axis] = step
    if spec.contains(u + shift) and spec.contains(u - shift):
        return (value(u + shift) - value(u - shift)) / (2 * step)
    direction = 1.0 if spec.contains(u + 2 * shift) else -1.0
    near, far = u + direction * shift, u + 2 * direction * shift
    return direction * (-3 * value(u) + 4 * value(near) - value(far)) / (2 * step)


def offset_tangent_angle(
    spec: ImmersionSpec,
    u: Sequence[float],
    field: Callable[[np.ndarray], np.ndarray],
    step: float = OFFSET_STEP,
) -> float:
    """Largest principal angle between the tangent spaces of f and of w -> f(w) + y(w)^a A_a(w) at u.

    ``field`` returns the normal components y(w) near u.
    """
    point = np.asarray(u, dtype=float)
    columns = [
        _axis_derivative(spec, point, axis, step, lambda w: _offset_point(spec, w, field))
        for axis in range(spec.r)
    ]
    return _max_principal_angle(np.stack(columns, axis=1), extract_frames(spec, point).tangent)


def _transported_field(spec: ImmersionSpec, u: np.ndarray, y: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """y carried from u to nearby points along straight segments."""

    def field(w: np.ndarray) -> np.ndarray:
        if np.array_equal(w, u):
            return y
        matrix, _ = _integrate(spec, PathSpec((straight_segment(u, w, 2),)), Bundle.NORMAL)
        return matrix @ y

    return field


def parallel_variety(
    spec: ImmersionSpec,
    y0: Sequence[float],
    grid: GridSpec,
    steps_per_cell: int = 50,
    tolerance: float | None = None,
) -> ParallelVarietyReport:
    """Offset variety f + y^a A_a with y transported by the normal connection."""
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    _check_grid(spec, grid)
    start = np.asarray(y0, dtype=float)
    if start.shape != (spec.n - spec.r,):
        raise InputError(f"expected {spec.n - spec.r} normal components, got {list(start.shape)}")
    frames_at = {index: extract_frames(spec, grid.point(index)) for index in grid.indices()}
    for index, frames in frames_at.items():
        if not normal_curvature(frames.fundamental_tensors(), tolerance).is_zero(tolerance):
            raise NotFlat(f"the normal connection is curved at {grid.point(index).tolist()}")

    axes = range(spec.r)
    forward = _sweep(spec, grid, start, list(axes), steps_per_cell)
    backward = _sweep(spec, grid, start, list(reversed(axes)), steps_per_cell)
    disagreement = max(float(np.max(np.abs(forward[i] - backward[i]))) for i in forward)
    if disagreement > PATH_INDEPENDENCE_TOLERANCE:
        raise PathDependence(f"lattice routes disagree by {disagreement:.3e}")

    samples = []
    for index in grid.indices():
        frames, y = frames_at[index], forward[index]
        angle = offset_tangent_angle(spec, frames.point, _transported_field(spec, frames.point, y))
        samples.append(
            ParallelSample(
                parameters=tuple(float(x) for x in frames.point),
                normal_components=tuple(float(x) for x in y),
                point=tuple(float(x) for x in frames.base_point + frames.normal @ y),
                tangent_angle=angle,
            )
        )
    max_angle = max(s.tangent_angle for s in samples)
    return ParallelVarietyReport(
        samples=tuple(samples),
        route_disagreement=disagreement,
        max_angle=max_angle,
        passed=max_angle < PARALLELISM_TOLERANCE,
    )


# Normal subbundles.


class FieldKind(str, Enum):
    FRAME = "frame"
    AMBIENT = "ambient"


@dataclass(frozen=True)
class NormalSubbundleField:
    """s field vectors B_f, by frame components xi^a_f(u) or by ambient vectors V_f(u)."""

    rows: tuple[tuple[Expr, ...], ...]
    kind: FieldKind = FieldKind.FRAME

    @property
    def s(self) -> int:
        return len(self.rows)

    @classmethod
    def build(
        cls, spec: ImmersionSpec, rows: Sequence[Sequence[str | Expr]], kind: FieldKind | str = FieldKind.FRAME
    ) -> "NormalSubbundleField":
        kind = FieldKind(kind)
        width = spec.n - spec.r if kind is FieldKind.FRAME else spec.n
        if not 1 <= len(rows) <= spec.n - spec.r:
            raise InputError(f"a normal subbundle needs between 1 and {spec.n - spec.r} fields")
        parsed = []
        for row in rows:
            if len(row) != width:
                raise InputError(f"each {kind.value} field needs {width} components, got {len(row)}")
            parsed.append(
                tuple(e if not isinstance(e, str) else parse_expression(e, spec.params) for e in row)
            )
        return cls(tuple(parsed), kind)


def _field_jets(spec: ImmersionSpec, field: NormalSubbundleField, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values (s, width) and parameter derivatives (s, width, r) of the field expressions."""
    env = {name: Jet.variable(x, i, spec.r) for i, (name, x) in enumerate(zip(spec.params, u))}
    width = len(field.rows[0])
    values, derivatives = np.zeros((field.s, width)), np.zeros((field.s, width, spec.r))
    for f, row in enumerate(field.rows):
        for a, expr in enumerate(row):
            result = evaluate(expr, env)
            if isinstance(result, Jet):
                values[f, a], derivatives[f, a] = result.val, result.grad
            else:
                values[f, a] = result
    return values, derivatives


def frame_components(
    spec: ImmersionSpec, field: NormalSubbundleField, frames: FrameData
) -> tuple[np.ndarray, np.ndarray]:
    """xi^a_f and d xi^a_f / du^s at the frame's point, as (s, l) and (s, l, r) arrays."""
    values, derivatives = _field_jets(spec, field, frames.point)
    if field.kind is FieldKind.FRAME:
        return values, derivatives
    xi = values @ frames.normal
    dxi = np.einsum("fis,ia->fas", derivatives, frames.normal) + np.einsum(
        "fi,ias->fas", values, frames.normal_derivatives
    )
    return xi, dxi


def _check_field_rank(xi: np.ndarray, u: np.ndarray) -> None:
    singular = np.linalg.svd(xi, compute_uv=False)
    if singular[0] == 0.0 or singular[-1] / singular[0] < 1e-8:
        raise RankDeficientField(f"the field vectors are dependent at {u.tolist()}")


@dataclass(frozen=True)
class SubbundleReport:
    parallel: bool
    max_residual: float
    points: int


def parallel_subbundle_check(
    spec: ImmersionSpec,
    field: NormalSubbundleField,
    grid: GridSpec,
    tolerance: float | None = None,
) -> SubbundleReport:
    """Test that D xi^a_f = d xi^a_f + xi^b_f gamma^a_b stays in the span of the xi_f."""
    tolerance = DEFAULT_TOLERANCE if tolerance is None else tolerance
    _check_grid(spec, grid)
    worst = 0.0
    for index in grid.indices():
        frames = extract_frames(spec, grid.point(index))
        xi, dxi = frame_components(spec, field, frames)
        _check_field_rank(xi, frames.point)
        covariant = dxi + np.einsum("fb,abs->fas", xi, frames.normal_connection)
        basis, _ = np.linalg.qr(xi.T)  # orthonormal basis of span{xi_f} in R^l
        for sigma in range(spec.r):
            block = covariant[:, :, sigma].T  # (l, s)
            rest = block - basis @ (basis.T @ block)
            worst = max(worst, float(np.max(np.abs(rest), initial=0.0)))
    return SubbundleReport(parallel=worst < tolerance, max_residual=worst, points=len(grid.indices()))


@dataclass(frozen=True)
class SweepReport:
    max_angle: float
    angles: tuple[float, ...]  # one per grid point
    fiber_samples: tuple[tuple[float, ...], ...]
    constant: bool


def default_fiber_samples(s: int) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(w for _ in range(s)) for w in (-0.5, -0.25, 0.0, 0.25, 0.5))


def swept_tangent_constancy(
    spec: ImmersionSpec,
    field: NormalSubbundleField,
    grid: GridSpec,
    fiber_samples: Sequence[Sequence[float]] | None = None,
    require_parallel: bool = True,
    tolerance: float | None = None,
) -> SweepReport:
    """Largest tangent-space rotation along the generators of the swept variety.

    The swept variety is (u, w) -> f(u) + w^f xi^a_f(u) A_a(u); along each
    generator (fixed u) the tangent spaces are compared with the one at the
    first fiber sample.
    """
    if require_parallel:
        check = parallel_subbundle_check(spec, field, grid, tolerance)
        if not check.parallel:
            raise PreconditionFailed(
                f"the field is not parallel in the normal bundle (residual {check.max_residual:.3e})"
            )
    samples = tuple(
        tuple(float(x) for x in w) for w in (fiber_samples or default_fiber_samples(field.s))
    )
    for w in samples:
        if len(w) != field.s:
            raise InputError(f"fiber samples need {field.s} coordinates, got {len(w)}")
    angles = []
    for index in grid.indices():
        frames = extract_frames(spec, grid.point(index))
        xi, dxi = frame_components(spec, field, frames)
        vectors = xi @ frames.normal.T  # B_f as rows
        derivatives = np.einsum("fas,ia->fis", dxi, frames.normal) + np.einsum(
            "fa,ias->fis", xi, frames.normal_derivatives
        )
        spaces = []
        for w in samples:
            along = frames.tangent + np.einsum("f,fis->is", np.asarray(w), derivatives)
            spaces.append(np.hstack([along, vectors.T]))
        angles.append(max(_max_principal_angle(spaces[0], space) for space in spaces[1:]) if len(spaces) > 1 else 0.0)
    max_angle = max(angles)
    return SweepReport(
        max_angle=max_angle,
        angles=tuple(angles),
        fiber_samples=samples,
        constant=max_angle < PARALLELISM_TOLERANCE,
    )
