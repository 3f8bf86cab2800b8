from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

Scalar = int | float | str


class TensorEntry(BaseModel):
    """A dense tensor with its axis names listed in storage order."""

    model_config = ConfigDict(extra="forbid")

    axes: list[str]
    values: Any


class TensorsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ambient: Literal["projective", "affine", "euclidean"]
    n: int
    r: int
    b: TensorEntry
    c: TensorEntry
    l: TensorEntry | None = None  # noqa: E741
    g_normal: TensorEntry | None = None
    g_tangent: TensorEntry | None = None


class DegenerateGaussSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int
    r: int
    big_n: int
    b: TensorEntry
    c: TensorEntry


class GeneratedSection(BaseModel):
    """A seeded instance; the seed comes from --seed or FOCALFRAMES_SEED unless given here."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["random", "central", "flat_normal", "flat_hypersurface", "degenerate_gauss"] = "random"
    ambient: Literal["projective", "affine", "euclidean"] = "affine"
    n: int
    r: int | None = None
    big_n: int | None = None
    seed: int | None = None


class ImmersionSection(BaseModel):
    """Either the three fields or ``source`` holding the text format."""

    model_config = ConfigDict(extra="forbid")

    params: list[str] | None = None
    components: list[str] | None = None
    domain: list[tuple[Scalar, Scalar]] | None = None
    source: str | None = None

    @model_validator(mode="after")
    def check_one_form(self):
        fields = (self.params, self.components, self.domain)
        if self.source is not None and any(f is not None for f in fields):
            raise ValueError("give either source or params/components/domain, not both")
        if self.source is None and any(f is None for f in fields):
            raise ValueError("params, components and domain are all required")
        return self


class PathSegmentModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    expressions: list[str]
    interval: tuple[float, float]
    steps: int | None = None


class RectangleModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    corner: list[float] | None = None
    axes: tuple[int, int] = (0, 1)
    eps: float = 0.1
    delta: float = 0.1


class FieldModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["frame", "ambient"] = "frame"
    rows: list[list[str]]


class SitesSection(BaseModel):
    """Inputs of the numeric subcommands; every entry has a default."""

    model_config = ConfigDict(extra="forbid")

    point: list[float] | None = None
    path: list[PathSegmentModel] | None = None
    vector: list[float] | None = None
    normal_vector: list[float] | None = None
    bundle: Literal["tangential", "normal"] = "tangential"
    rectangle: RectangleModel | None = None
    grid: list[tuple[float, float, int]] | None = None
    field: FieldModel | None = None
    fiber_samples: list[list[float]] | None = None
    require_parallel: bool = True
    focal_point: list[Scalar] | None = None
    hyperplane: list[Scalar] | None = None
    direction: list[Scalar] | None = None


class VarietySpecFile(BaseModel):
    """Input document: exactly one of tensors, degenerate_gauss, immersion or generated."""

    model_config = ConfigDict(extra="forbid")

    label: str | None = None
    scalar_mode: Literal["exact", "float"] | None = None
    tensors: TensorsSection | None = None
    degenerate_gauss: DegenerateGaussSection | None = None
    immersion: ImmersionSection | None = None
    generated: GeneratedSection | None = None
    sites: SitesSection = Field(default_factory=SitesSection)

    @model_validator(mode="after")
    def check_exactly_one(self):
        present = [
            name
            for name in ("tensors", "degenerate_gauss", "immersion", "generated")
            if getattr(self, name) is not None
        ]
        if len(present) != 1:
            raise ValueError(
                "exactly one of tensors, degenerate_gauss, immersion or generated is required, "
                f"got {present or 'none'}"
            )
        return self

    @property
    def kind(self) -> str:
        if self.tensors is not None:
            return "tensors"
        if self.degenerate_gauss is not None:
            return "degenerate_gauss"
        if self.generated is not None:
            return "generated"
        return "immersion"


class SectionResult(BaseModel):
    status: Literal["ok", "failed", "skipped"]
    result: dict[str, Any] | None = None
    reason: str | None = None


class Report(BaseModel):
    tool: str
    version: str
    operation: str
    label: str | None = None
    input_digest: str
    status: Literal["ok", "failed"]
    sections: dict[str, SectionResult]
    wall_time: float | None = None
