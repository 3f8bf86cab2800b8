"""Turn an input document into report sections and render them."""

import asyncio
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

from api.schemas import GeneratedSection, TensorEntry, VarietySpecFile
from config.settings import DEFAULT_SEED, Settings
from services.curvature import (
    classify_normalization,
    curvature_tensors,
    flatness_report,
    lowered_curvature,
    ricci_pair,
    second_fundamental_form,
    sectional_curvature,
)
from services.errors import FocalFramesError, InputError, NotFactorable, ShapeMismatch, UsageError
from services.expressions import evaluate, parse_expression, render as render_expression
from services.focal import (
    dual_nondegenerate,
    factor_linear,
    focus_hypercone_poly,
    focus_hypersurface_poly,
    hypercone_at,
    infinity_slice_identity,
    jacobian_at,
)
from services.immersion import ImmersionSpec, extract_frames, parse_immersion
from services.polynomial import MultiPoly
from services.tensors import IndexRanges, ScalarKind, to_exact
from services.transport import (
    GridSpec,
    NormalSubbundleField,
    PathSegment,
    PathSpec,
    coordinate_rectangle,
    default_fiber_samples,
    holonomy_loop,
    parallel_subbundle_check,
    parallel_variety,
    swept_tangent_constancy,
    transport_normal,
    transport_tangent,
)
from services.varieties import (
    Ambient,
    DegenerateGaussTensors,
    FundamentalTensors,
    central_instance,
    degenerate_gauss_instance,
    flat_hypersurface_instance,
    flat_normal_instance,
    random_instance,
    validate_degenerate_gauss,
    validate_normalized,
)

logger = logging.getLogger(__name__)

TOOL = "focalframes"
VERSION = "0.1.0"

OPERATIONS: dict[str, tuple[str, ...]] = {
    "validate": ("validate", "classify"),
    "classify": ("validate", "classify"),
    "curvature": ("validate", "curvature"),
    "focal": ("validate", "focal"),
    "frames": ("frames",),
    "transport": ("transport",),
    "holonomy": ("holonomy",),
    "parallel": ("parallel",),
    "sweep": ("subbundle", "sweep"),
    "report-all": (),
}
IMMERSION_ONLY = {"frames", "transport", "holonomy", "parallel", "subbundle", "sweep"}

CANONICAL_AXES = {
    "b": ("a", "p", "q"),
    "c": ("a", "p", "q"),
    "l": ("p", "q"),
    "g_normal": ("a", "b"),
    "g_tangent": ("p", "q"),
    "b_alpha": ("alpha", "p", "q"),
}


# Input.


def digest_bytes(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def digest_document(document: VarietySpecFile) -> str:
    canonical = json.dumps(document.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return digest_bytes(canonical.encode())


def load_document(path: Path) -> tuple[VarietySpecFile, str]:
    """Read a JSON input file; errors carry the file name and position."""
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise InputError(f"{path}: cannot read input ({e.strerror})")
    try:
        payload = json.loads(raw)
    except UnicodeDecodeError as e:
        raise InputError(f"{path}: input is not UTF-8 ({e.reason})")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: {e.msg}", e.lineno, e.colno)
    try:
        document = VarietySpecFile.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        prefix = f"{path}: {location}" if location else str(path)
        raise InputError(f"{prefix}: {first['msg']}")
    return document, digest_bytes(raw)


def _tensor_values(entry: TensorEntry, name: str, kind: ScalarKind) -> np.ndarray:
    canonical = CANONICAL_AXES[name]
    if sorted(entry.axes) != sorted(canonical):
        raise InputError(f"tensor {name} needs axes {list(canonical)} in some order, got {entry.axes}")
    try:
        values = np.array(entry.values, dtype=object)
        if values.ndim != len(canonical):
            raise InputError(f"tensor {name} has {values.ndim} dimensions but {len(canonical)} axes")
        values = np.transpose(values, [entry.axes.index(axis) for axis in canonical])
        if kind is ScalarKind.FLOAT:
            return np.vectorize(lambda x: float(to_exact(x)), otypes=[float])(values)
        return np.vectorize(to_exact, otypes=[object])(values)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"tensor {name}: {e}")


def _generate(section: GeneratedSection, seed: int) -> FundamentalTensors | DegenerateGaussTensors:
    seed = section.seed if section.seed is not None else seed
    if section.family == "flat_hypersurface":
        return flat_hypersurface_instance(section.n, seed)
    ranges = IndexRanges(section.n, section.r if section.r is not None else section.n - 1, section.big_n)
    if section.family == "central":
        return central_instance(ranges, seed)
    if section.family == "flat_normal":
        return flat_normal_instance(ranges, section.ambient, seed)
    if section.family == "degenerate_gauss":
        return degenerate_gauss_instance(ranges, seed)
    return random_instance(ranges, section.ambient, seed)


def build_variety(
    document: VarietySpecFile, seed: int = DEFAULT_SEED
) -> FundamentalTensors | DegenerateGaussTensors | None:
    if document.generated is not None:
        return _generate(document.generated, seed)
    kind = ScalarKind(document.scalar_mode or "exact")
    if document.tensors is not None:
        section = document.tensors
        optional = {
            name: None if entry is None else _tensor_values(entry, name, kind)
            for name, entry in (("l", section.l), ("g_normal", section.g_normal), ("g_tangent", section.g_tangent))
        }
        return FundamentalTensors.build(
            Ambient(section.ambient),
            section.n,
            section.r,
            _tensor_values(section.b, "b", kind),
            _tensor_values(section.c, "c", kind),
            optional["l"],
            optional["g_normal"],
            optional["g_tangent"],
            kind=kind,
        )
    if document.degenerate_gauss is not None:
        section = document.degenerate_gauss
        return DegenerateGaussTensors.build(
            section.n,
            section.r,
            section.big_n,
            _tensor_values(section.b, "b_alpha", kind),
            _tensor_values(section.c, "c", kind),
            kind=kind,
        )
    return None


def build_immersion(document: VarietySpecFile) -> ImmersionSpec | None:
    section = document.immersion
    if section is None:
        return None
    if section.source is not None:
        return parse_immersion(section.source)
    domain = []
    for lo, hi in section.domain:
        domain.append(tuple(_bound(x) for x in (lo, hi)))
    return ImmersionSpec.build(section.params, section.components, domain)


def _bound(value: Any) -> float:
    if isinstance(value, str):
        return evaluate(parse_expression(value, ()), {})
    return float(value)


# Sites.


@dataclass
class Sites:
    point: np.ndarray
    path: PathSpec | None
    vector: np.ndarray
    normal_vector: np.ndarray
    bundle: str
    rectangle: PathSpec | None
    grid: GridSpec
    field: NormalSubbundleField | None
    fiber_samples: tuple[tuple[float, ...], ...] | None
    require_parallel: bool
    focal_point: tuple | None
    hyperplane: list | None
    direction: list | None


def _default_rectangle(spec: ImmersionSpec, centre: np.ndarray, steps: int) -> PathSpec | None:
    if spec.r < 2:
        return None
    sides = [min(0.1, (hi - lo) / 2) for lo, hi in spec.domain[:2]]
    corner = centre.copy()
    corner[0] -= sides[0] / 2
    corner[1] -= sides[1] / 2
    return coordinate_rectangle(corner, (0, 1), sides[0], sides[1], steps)


def resolve_sites(document: VarietySpecFile, spec: ImmersionSpec | None, settings: Settings) -> Sites:
    raw = document.sites
    steps = settings.steps
    if spec is None:
        return Sites(
            point=np.zeros(0),
            path=None,
            vector=np.zeros(0),
            normal_vector=np.zeros(0),
            bundle=raw.bundle,
            rectangle=None,
            grid=GridSpec(()),
            field=None,
            fiber_samples=None,
            require_parallel=raw.require_parallel,
            focal_point=None if raw.focal_point is None else tuple(raw.focal_point),
            hyperplane=raw.hyperplane,
            direction=raw.direction,
        )
    point = np.array(raw.point, dtype=float) if raw.point is not None else spec.centre
    rectangle = None
    if raw.rectangle is not None:
        corner = raw.rectangle.corner
        if corner is None:
            corner = list(point)
            corner[raw.rectangle.axes[0]] -= raw.rectangle.eps / 2
            corner[raw.rectangle.axes[1]] -= raw.rectangle.delta / 2
        rectangle = coordinate_rectangle(
            corner, raw.rectangle.axes, raw.rectangle.eps, raw.rectangle.delta, max(2, steps // 4)
        )
    else:
        rectangle = _default_rectangle(spec, point, max(2, steps // 4))
    if raw.path is not None:
        path = PathSpec(
            tuple(
                PathSegment.build(s.expressions, s.interval, s.steps or steps) for s in raw.path
            )
        )
    else:
        path = rectangle
    unit = np.zeros(spec.r)
    unit[0] = 1.0
    normal_unit = np.zeros(spec.n - spec.r)
    normal_unit[0] = 1.0
    return Sites(
        point=point,
        path=path,
        vector=np.array(raw.vector, dtype=float) if raw.vector is not None else unit,
        normal_vector=(
            np.array(raw.normal_vector, dtype=float) if raw.normal_vector is not None else normal_unit
        ),
        bundle=raw.bundle,
        rectangle=rectangle,
        grid=GridSpec.build(raw.grid) if raw.grid is not None else GridSpec.middle(spec),
        field=None if raw.field is None else NormalSubbundleField.build(spec, raw.field.rows, raw.field.kind),
        fiber_samples=None if raw.fiber_samples is None else tuple(tuple(w) for w in raw.fiber_samples),
        require_parallel=raw.require_parallel,
        focal_point=None if raw.focal_point is None else tuple(raw.focal_point),
        hyperplane=raw.hyperplane,
        direction=raw.direction,
    )


# Serialization helpers.


def scalar(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def nested(array: Any) -> Any:
    if isinstance(array, np.ndarray):
        array = array.tolist()
    if isinstance(array, (list, tuple)):
        return [nested(x) for x in array]
    return scalar(array)


def _float_text(value: Fraction) -> str:
    return repr(float(value))


def polynomial_record(poly: MultiPoly, variables: tuple[str, ...], kind: ScalarKind) -> dict:
    formatter = str if kind is ScalarKind.EXACT else _float_text
    return {
        "text": poly.render(variables, formatter),
        "variables": list(variables),
        "degree": poly.degree(),
        "terms": [[exponents, numerator, denominator] for exponents, numerator, denominator in poly.to_records()],
    }


def compact_product(factors: list, variables: tuple[str, ...], kind: ScalarKind) -> str:
    formatter = str if kind is ScalarKind.EXACT else _float_text
    pieces = []
    for factor in factors:
        text = factor.form.render(variables, formatter).replace(" ", "").replace("*", "")
        pieces.append(f"({text})" + (f"^{factor.multiplicity}" if factor.multiplicity > 1 else ""))
    return "".join(pieces)


# Sections.


@dataclass
class Context:
    document: VarietySpecFile
    settings: Settings
    variety: FundamentalTensors | DegenerateGaussTensors | None
    immersion: ImmersionSpec | None
    sites: Sites
    frames: Any = None
    validated: bool | None = None
    extras: dict = field(default_factory=dict)

    @property
    def tolerance(self) -> float:
        return self.settings.tolerance

    def data(self) -> FundamentalTensors | DegenerateGaussTensors:
        """The tensor data under study; immersions are read at the chosen point."""
        if self.variety is not None:
            return self.variety
        if self.frames is None:
            self.frames = extract_frames(self.immersion, self.sites.point)
        return self.frames.fundamental_tensors()


class Skipped(Exception):
    """A section that does not apply to this input."""


def _validate_section(ctx: Context) -> dict:
    data = ctx.data()
    if isinstance(data, DegenerateGaussTensors):
        report = validate_degenerate_gauss(data, ctx.tolerance)
        shape = {"kind": ctx.document.kind, "n": data.ranges.n, "r": data.ranges.r, "big_n": data.ranges.big_n}
    else:
        report = validate_normalized(data, ctx.tolerance)
        shape = {
            "kind": ctx.document.kind,
            "ambient": data.ambient.value,
            "n": data.ranges.n,
            "r": data.ranges.r,
            "l": data.ranges.l,
        }
    ctx.validated = report.passed
    if not report.passed:
        logger.info("validation failed: %s", ", ".join(report.violations))
    return {
        **shape,
        "scalar_mode": data.kind.value,
        "passed": report.passed,
        "violations": list(report.violations),
        "details": list(report.details),
    }


def _require_normalized(ctx: Context) -> FundamentalTensors:
    data = ctx.data()
    if not isinstance(data, FundamentalTensors):
        raise Skipped("applies to normalized varieties only")
    return data


def _classify_section(ctx: Context) -> dict:
    result = classify_normalization(_require_normalized(ctx), ctx.tolerance)
    return {
        "tag": result.tag.value,
        "witness": None if result.witness is None else [scalar(x) for x in result.witness],
    }


def _curvature_section(ctx: Context) -> dict:
    data = _require_normalized(ctx)
    tensors = curvature_tensors(data, ctx.tolerance)
    flat = flatness_report(data, ctx.tolerance)
    result: dict[str, Any] = {
        "tangential": nested(tensors.r_t.data),
        "normal": nested(tensors.r_n.data),
        "ricci_contractions": {"tangential": nested(tensors.ric_t.data), "normal": nested(tensors.ric_n.data)},
        "flatness": {
            "tangential_flat": flat.tangential_flat,
            "normal_flat": flat.normal_flat,
            "products_symmetric": flat.products_symmetric,
        },
    }
    if data.ambient.is_affine or data.lten.is_zero(ctx.tolerance):
        ric_t, ric_n = ricci_pair(data, ctx.tolerance)
        result["ricci"] = {"tangential": nested(ric_t.data), "normal": nested(ric_n.data)}
    if data.ambient is Ambient.EUCLIDEAN:
        result["lowered"] = nested(lowered_curvature(data, ctx.tolerance).data)
        if data.ranges.r >= 2:
            result["sectional_curvature"] = scalar(sectional_curvature(data, 0, 1, ctx.tolerance))
    sites = ctx.sites
    if sites.hyperplane is not None and sites.direction is not None:
        try:
            form = second_fundamental_form(data, sites.hyperplane, sites.direction)
        except ShapeMismatch as e:
            result["second_fundamental_form"] = {"error": str(e)}
        else:
            result["second_fundamental_form"] = scalar(form)
    return result


def _focal_section(ctx: Context) -> dict:
    data = ctx.data()
    kind = data.kind
    hypersurface = focus_hypersurface_poly(data, ctx.tolerance)
    hypercone = focus_hypercone_poly(data, ctx.tolerance)
    point = ctx.sites.focal_point or (1,) + (0,) * data.ranges.l
    value, point_kind = jacobian_at(data, point, ctx.tolerance)
    result: dict[str, Any] = {
        "hypersurface": polynomial_record(hypersurface.polynomial, hypersurface.variables, kind),
        "regular_point": [scalar(x) for x in hypersurface.regular_point],
        "hypercone": polynomial_record(hypercone.polynomial, hypercone.variables, kind),
        "dual_nondegenerate": dual_nondegenerate(data, ctx.tolerance),
        "jacobian": {
            "point": [scalar(to_exact(x)) for x in point],
            "value": scalar(value if kind is ScalarKind.EXACT else float(value)),
            "kind": point_kind.value,
        },
    }
    if ctx.sites.hyperplane is not None:
        try:
            at_value, at_kind = hypercone_at(data, ctx.sites.hyperplane, ctx.tolerance)
        except ShapeMismatch as e:
            result["hyperplane"] = {"error": str(e)}
        else:
            result["hyperplane"] = {
                "coordinates": [scalar(to_exact(x)) for x in ctx.sites.hyperplane],
                "value": scalar(at_value if kind is ScalarKind.EXACT else float(at_value)),
                "kind": at_kind.value,
            }
    if hypersurface.lowered is not None:
        result["lowered"] = polynomial_record(hypersurface.lowered, hypersurface.variables, kind)
    try:
        factors = factor_linear(data, ctx.tolerance)
    except NotFactorable as e:
        result["factorization"] = None
        result["factorization_error"] = str(e)
    else:
        result["factorization"] = {
            "factors": [
                {
                    "form": f.form.render(hypersurface.variables, str if kind is ScalarKind.EXACT else _float_text),
                    "multiplicity": f.multiplicity,
                }
                for f in factors
            ],
            "product": compact_product(factors, hypersurface.variables, kind),
        }
    if isinstance(data, FundamentalTensors) and data.ambient is Ambient.EUCLIDEAN:
        identity = infinity_slice_identity(data, ctx.tolerance)
        result["infinity_slice"] = {
            "holds": identity.holds,
            "restricted": polynomial_record(identity.restricted, identity.variables, kind),
            "hypercone": polynomial_record(identity.hypercone, identity.variables, kind),
        }
    return result


def _require_immersion(ctx: Context) -> ImmersionSpec:
    if ctx.immersion is None:
        raise Skipped("needs an immersion input")
    return ctx.immersion


def _frames_section(ctx: Context) -> dict:
    spec = _require_immersion(ctx)
    frames = extract_frames(spec, ctx.sites.point)
    report = validate_normalized(frames.fundamental_tensors(), ctx.tolerance)
    return {
        "point": nested(frames.point),
        "base_point": nested(frames.base_point),
        "tangent": nested(frames.tangent),
        "normal": nested(frames.normal),
        "g_tangent": nested(frames.g_tangent),
        "b": nested(frames.b),
        "c": nested(frames.c),
        "christoffel": nested(frames.christoffel),
        "normal_connection": nested(frames.normal_connection),
        "validated": report.passed,
    }


def _path_record(path: PathSpec) -> list[dict]:
    return [
        {
            "expressions": [render_expression(e) for e in segment.expressions],
            "interval": list(segment.interval),
            "steps": segment.steps,
        }
        for segment in path.segments
    ]


def _transport_record(result) -> dict:
    return {
        "final": nested(result.final),
        "drift": result.drift,
        "log": [[entry.segment, entry.t, *entry.components] for entry in result.log],
    }


def _transport_section(ctx: Context) -> dict:
    spec = _require_immersion(ctx)
    path = ctx.sites.path
    if path is None:
        raise Skipped("no path given and the immersion has a single parameter")
    return {
        "path": _path_record(path),
        "tangential": {"initial": nested(ctx.sites.vector), **_transport_record(transport_tangent(spec, path, ctx.sites.vector))},
        "normal": {
            "initial": nested(ctx.sites.normal_vector),
            **_transport_record(transport_normal(spec, path, ctx.sites.normal_vector)),
        },
    }


def _holonomy_section(ctx: Context) -> dict:
    spec = _require_immersion(ctx)
    loop = ctx.sites.rectangle
    if loop is None:
        raise Skipped("holonomy needs at least two parameters")
    result = holonomy_loop(spec, loop, ctx.sites.bundle, ctx.tolerance)
    rectangle = loop.rectangle
    return {
        "bundle": result.bundle.value,
        "rectangle": {
            "corner": list(rectangle.corner),
            "axes": list(rectangle.axes),
            "eps": rectangle.eps,
            "delta": rectangle.delta,
        },
        "matrix": nested(result.matrix),
        "prediction": nested(result.prediction),
        "residual": result.residual,
        "bound": result.bound,
        "consistent": result.consistent,
        "closure_defect": result.closure_defect,
        "rotation_angle": result.rotation_angle,
    }


def _parallel_section(ctx: Context) -> dict:
    spec = _require_immersion(ctx)
    report = parallel_variety(spec, ctx.sites.normal_vector, ctx.sites.grid, tolerance=ctx.tolerance)
    return {
        "normal_vector": nested(ctx.sites.normal_vector),
        "grid": [list(axis) for axis in ctx.sites.grid.axes],
        "route_disagreement": report.route_disagreement,
        "max_angle": report.max_angle,
        "passed": report.passed,
        "samples": [
            {
                "parameters": list(s.parameters),
                "normal_components": list(s.normal_components),
                "point": list(s.point),
                "tangent_angle": s.tangent_angle,
            }
            for s in report.samples
        ],
    }


def _require_field(ctx: Context) -> tuple[ImmersionSpec, NormalSubbundleField]:
    spec = _require_immersion(ctx)
    if ctx.sites.field is None:
        raise Skipped("no normal field given")
    return spec, ctx.sites.field


def _subbundle_section(ctx: Context) -> dict:
    spec, normal_field = _require_field(ctx)
    report = parallel_subbundle_check(spec, normal_field, ctx.sites.grid, ctx.tolerance)
    return {"parallel": report.parallel, "max_residual": report.max_residual, "points": report.points}


def _sweep_section(ctx: Context) -> dict:
    spec, normal_field = _require_field(ctx)
    samples = ctx.sites.fiber_samples or default_fiber_samples(normal_field.s)
    report = swept_tangent_constancy(
        spec,
        normal_field,
        ctx.sites.grid,
        samples,
        require_parallel=ctx.sites.require_parallel,
        tolerance=ctx.tolerance,
    )
    return {
        "max_angle": report.max_angle,
        "angles": list(report.angles),
        "fiber_samples": [list(w) for w in report.fiber_samples],
        "constant": report.constant,
    }


SECTIONS: dict[str, Callable[[Context], dict]] = {
    "validate": _validate_section,
    "classify": _classify_section,
    "curvature": _curvature_section,
    "focal": _focal_section,
    "frames": _frames_section,
    "transport": _transport_section,
    "holonomy": _holonomy_section,
    "parallel": _parallel_section,
    "subbundle": _subbundle_section,
    "sweep": _sweep_section,
}
GATED = {"classify", "curvature", "focal"}


def _infinity_slice_check(result: dict) -> str | None:
    identity = result.get("infinity_slice")
    if identity is not None and not identity["holds"]:
        return "the hypersurface restricted to y0 = 0 differs from the hypercone"
    return None


# Section result -> reason it failed, or None.
CHECKS: dict[str, Callable[[dict], str | None]] = {
    "validate": lambda r: None if r["passed"] else "validation failed",
    "focal": _infinity_slice_check,
    "frames": lambda r: None if r["validated"] else "frame data fails validation",
    "holonomy": lambda r: (
        "holonomy residual exceeds the curvature bound" if r["consistent"] is False else None
    ),
    "parallel": lambda r: None if r["passed"] else "offset tangent spaces or transport routes disagree",
    "subbundle": lambda r: None if r["parallel"] else "the field is not parallel in the normal bundle",
    "sweep": lambda r: None if r["constant"] else "tangent spaces turn along the generators",
}


def report_all_sections(ctx: Context) -> tuple[str, ...]:
    names = ["validate", "classify", "curvature", "focal"]
    if ctx.immersion is not None:
        names += ["frames", "transport", "holonomy", "parallel"]
        if ctx.sites.field is not None:
            names += ["subbundle", "sweep"]
    return tuple(names)


def run_section(name: str, ctx: Context) -> dict:
    if name in GATED and ctx.validated is False:
        return {"status": "skipped", "reason": "input failed validation"}
    try:
        result = SECTIONS[name](ctx)
    except Skipped as e:
        return {"status": "skipped", "reason": str(e)}
    except Exception as e:
        # A failing section must not stop the others.
        logger.warning("section %s failed: %s", name, e)
        return {"status": "failed", "reason": f"{type(e).__name__}: {e}"}
    reason = CHECKS[name](result) if name in CHECKS else None
    if reason is not None:
        logger.info("section %s check failed: %s", name, reason)
        return {"status": "failed", "result": result, "reason": reason}
    return {"status": "ok", "result": result}


def _context(document: VarietySpecFile, settings: Settings) -> Context:
    try:
        variety = build_variety(document, settings.seed)
        immersion = build_immersion(document)
    except FocalFramesError as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"{type(e).__name__}: {e}")
    return Context(
        document=document,
        settings=settings,
        variety=variety,
        immersion=immersion,
        sites=resolve_sites(document, immersion, settings),
    )


def _section_names(operation: str, ctx: Context) -> tuple[str, ...]:
    if operation not in OPERATIONS:
        raise UsageError(f"unknown operation {operation!r}")
    if operation == "report-all":
        return report_all_sections(ctx)
    names = OPERATIONS[operation]
    if ctx.immersion is None and IMMERSION_ONLY.intersection(names):
        raise UsageError(f"{operation} needs an immersion input")
    return names


def _assemble(operation: str, document: VarietySpecFile, digest: str, sections: dict, started: float, settings: Settings) -> dict:
    elapsed = time.perf_counter() - started
    logger.info("%s finished in %.3f s", operation, elapsed)
    failed = any(section["status"] == "failed" for section in sections.values())
    report = {
        "tool": TOOL,
        "version": VERSION,
        "operation": operation,
        "label": document.label,
        "input_digest": digest,
        "status": "failed" if failed else "ok",
        "sections": sections,
    }
    if settings.timings:
        report["wall_time"] = elapsed
    return report


def run_operation(operation: str, document: VarietySpecFile, digest: str, settings: Settings) -> dict:
    """Run one subcommand's sections in order and return the report."""
    started = time.perf_counter()
    ctx = _context(document, settings)
    sections = {}
    for name in _section_names(operation, ctx):
        sections[name] = run_section(name, ctx)
    return _assemble(operation, document, digest, sections, started, settings)


async def report_all(document: VarietySpecFile, digest: str, settings: Settings) -> dict:
    """Validation first, then every other section concurrently; output order is fixed."""
    started = time.perf_counter()
    ctx = _context(document, settings)
    names = report_all_sections(ctx)
    sections = {"validate": run_section("validate", ctx)}
    if ctx.immersion is not None and ctx.frames is None:
        try:
            ctx.data()
        except FocalFramesError:
            pass
    rest = [name for name in names if name != "validate"]
    results = await asyncio.gather(*(asyncio.to_thread(run_section, name, ctx) for name in rest))
    sections.update(zip(rest, results))
    return _assemble("report-all", document, digest, sections, started, settings)


# Rendering.


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _md_scalar(value: Any) -> str:
    if isinstance(value, str) and "/" in value:
        try:
            return f"{value} ({float(Fraction(value))!r})"
        except (ValueError, ZeroDivisionError):
            return value
    if value is None:
        return "n/a"
    return str(value)


def _is_table(value: Any) -> bool:
    return (
        isinstance(value, list)
        and len(value) > 0
        and all(isinstance(row, list) and not any(isinstance(x, (list, dict)) for x in row) for row in value)
    )


def _md_lines(key: str, value: Any, depth: int) -> list[str]:
    indent = "  " * depth
    if isinstance(value, dict):
        lines = [f"{indent}- **{key}**:"]
        for child_key, child in value.items():
            lines += _md_lines(child_key, child, depth + 1)
        return lines
    if _is_table(value):
        width = max(len(row) for row in value)
        lines = [f"{indent}- **{key}**:", ""]
        lines.append(indent + "  | " + " | ".join(f"c{j}" for j in range(width)) + " |")
        lines.append(indent + "  |" + "---|" * width)
        for row in value:
            lines.append(indent + "  | " + " | ".join(_md_scalar(x) for x in row) + " |")
        lines.append("")
        return lines
    if isinstance(value, list):
        if any(isinstance(x, (list, dict)) for x in value):
            lines = [f"{indent}- **{key}**:"]
            for k, item in enumerate(value):
                lines += _md_lines(str(k), item, depth + 1)
            return lines
        return [f"{indent}- **{key}**: [" + ", ".join(_md_scalar(x) for x in value) + "]"]
    return [f"{indent}- **{key}**: {_md_scalar(value)}"]


def render_markdown(report: dict) -> str:
    lines = [
        f"# {report['tool']} report: {report['operation']}",
        "",
        f"- label: {report['label'] or 'n/a'}",
        f"- input digest: `{report['input_digest']}`",
        f"- version: {report['version']}",
        f"- status: {report['status']}",
    ]
    if "wall_time" in report:
        lines.append(f"- wall time: {report['wall_time']:.3f} s")
    for name, section in report["sections"].items():
        lines += ["", f"## {name}", "", f"status: {section['status']}"]
        if section.get("reason"):
            lines.append(f"reason: {section['reason']}")
        if section.get("result") is not None:
            lines.append("")
            for key, value in section["result"].items():
                lines += _md_lines(key, value, 0)
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "md":
        return render_markdown(report)
    raise UsageError(f"unknown format {fmt!r}, expected json or md")
