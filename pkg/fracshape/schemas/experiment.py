# fracshape/schemas/experiment.py
"""Experiment configuration, validated in full before any compute."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fracshape.core.config import settings
from fracshape.core.errors import FracShapeError
from fracshape.grid.lattice import DomainMask, Grid
from fracshape.schemas.grid import GridSpec, MaskSpec, decode_cells
from fracshape.shape.functionals import FunctionalSpec
from fracshape.shape.masks import ball_mask

KINDS = ("grid", "eig", "torsion", "two-ball", "minimize", "classify", "lieb", "bounds-audit")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BallSpec(_Strict):
    center: list[float]
    volume: float = Field(gt=0)


class DomainSpec(_Strict):
    """A mask given either as run-length encoded cells or as a lattice ball."""

    cells: str | None = None
    ball: BallSpec | None = None

    @model_validator(mode="after")
    def one_form(self):
        if (self.cells is None) == (self.ball is None):
            raise ValueError("give exactly one of 'cells' or 'ball'")
        return self

    def build(self, grid: Grid) -> DomainMask:
        if self.cells is not None:
            return MaskSpec(grid=GridSpec.of(grid), cells=self.cells).build(grid)
        return ball_mask(grid, self.ball.center, self.ball.volume)


class FunctionalSpecModel(_Strict):
    expression: str
    name: str = ""

    @field_validator("expression")
    @classmethod
    def parses(cls, value: str) -> str:
        try:
            FunctionalSpec(value)
        except FracShapeError as exc:
            raise ValueError(exc.message) from exc
        return value

    def build(self) -> FunctionalSpec:
        return FunctionalSpec(self.expression, self.name)


class EigParams(_Strict):
    k: int = Field(default=3, ge=1)


class TwoBallParams(_Strict):
    total_volume: float = Field(gt=0)
    distances: list[float] = Field(min_length=1)


class MinimizeParams(_Strict):
    c: float = Field(gt=0)
    iterations: int = Field(ge=0)
    t0: float | None = Field(default=None, ge=0)
    decay: float = Field(default=0.995, gt=0, le=1)
    record_every: int = Field(default=50, ge=1)
    tail_length: int = Field(default=16, ge=1)
    jump_probability: float = Field(default=0.1, ge=0, le=1)
    temperature_floor: float = Field(default=1e-2, ge=0, le=1)


class ClassifyParams(_Strict):
    generator: Literal["translating_bump", "flattening_bump", "separating_pair"]
    length: int = Field(default=10, ge=8)
    epsilon_fraction: float = Field(default=0.1, gt=0, lt=0.25)


class LiebParams(_Strict):
    mask_a: DomainSpec
    mask_b: DomainSpec


class AuditParams(_Strict):
    trials: int = Field(default=10, ge=1)
    checks: list[str] | None = None


class ExperimentConfig(_Strict):
    kind: Literal["grid", "eig", "torsion", "two-ball", "minimize", "classify", "lieb", "bounds-audit"]
    grid: GridSpec | None = None
    s: float = 0.5
    kernel_rule: Literal["midpoint", "corrected"] | None = None
    functional: FunctionalSpecModel | None = None
    domain: DomainSpec | None = None
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    output_dir: str | None = None
    tolerances: dict[str, float] = Field(default_factory=dict)

    eig: EigParams | None = None
    two_ball: TwoBallParams | None = None
    minimize: MinimizeParams | None = None
    classify: ClassifyParams | None = None
    lieb: LiebParams | None = None
    audit: AuditParams | None = None

    @field_validator("s")
    @classmethod
    def s_in_range(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {value}")
        return value

    @field_validator("tolerances")
    @classmethod
    def known_tolerances(cls, value: dict) -> dict:
        unknown = sorted(set(value) - set(settings.TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerance keys: {', '.join(unknown)}")
        return value

    @model_validator(mode="after")
    def check_kind(self):
        needs = {
            "grid": ["grid"],
            "eig": ["grid", "domain"],
            "torsion": ["grid", "domain"],
            "two-ball": ["grid", "two_ball"],
            "minimize": ["grid", "functional", "minimize"],
            "classify": ["classify"],
            "lieb": ["grid", "lieb"],
            "bounds-audit": ["grid"],
        }[self.kind]
        missing = [name for name in needs if getattr(self, name) is None]
        if missing:
            raise ValueError(f"kind {self.kind!r} requires: {', '.join(missing)}")
        if self.grid is not None:
            try:
                grid = self.grid.build()
            except FracShapeError as exc:
                raise ValueError(exc.message) from exc
            if grid.n_cells > settings.ASSEMBLY_LIMIT and self.kind != "grid":
                raise ValueError(f"grid has {grid.n_cells} cells, above the assembly limit {settings.ASSEMBLY_LIMIT}")
            for label, spec in (("domain", self.domain), *self._lieb_masks()):
                if spec is None:
                    continue
                if spec.cells is not None:
                    decode_cells(spec.cells, grid.n_cells)
                elif len(spec.ball.center) != grid.dim:
                    raise ValueError(f"{label}: ball center needs {grid.dim} coordinates")
        return self

    def _lieb_masks(self):
        if self.lieb is None:
            return []
        return [("lieb.mask_a", self.lieb.mask_a), ("lieb.mask_b", self.lieb.mask_b)]

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        return self if seed is None else self.model_copy(update={"seeds": [seed]})
