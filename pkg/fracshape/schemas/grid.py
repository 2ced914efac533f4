# fracshape/schemas/grid.py
"""JSON forms of grids and masks. Mask cells are run-length encoded, first run counting unset cells."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from fracshape.grid.lattice import DomainMask, Grid, build_grid


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(ge=1, le=2)
    half_width: float = Field(gt=0)
    resolution: int = Field(ge=2)

    def build(self) -> Grid:
        return build_grid(self.dim, self.half_width, self.resolution)

    @classmethod
    def of(cls, grid: Grid) -> "GridSpec":
        return cls(**grid.to_dict())


def encode_cells(cells: np.ndarray) -> str:
    cells = np.asarray(cells, dtype=bool)
    edges = np.flatnonzero(np.diff(cells.astype(np.int8))) + 1
    bounds = np.concatenate([[0], edges, [cells.size]])
    runs = np.diff(bounds).tolist()
    if cells.size and cells[0]:
        runs = [0] + runs
    return ",".join(str(r) for r in runs)


def decode_cells(text: str, size: int) -> np.ndarray:
    runs = [int(r) for r in text.split(",") if r.strip()] if text.strip() else []
    if any(r < 0 for r in runs) or sum(runs) != size:
        raise ValueError(f"runs must be nonnegative and sum to {size}")
    return np.repeat(np.arange(len(runs)) % 2 == 1, runs)


class MaskSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: GridSpec
    cells: str

    @field_validator("cells")
    @classmethod
    def check_runs(cls, value: str) -> str:
        if value.strip() and not all(part.strip().isdigit() for part in value.split(",")):
            raise ValueError("cells must be comma separated run lengths")
        return value

    def build(self, grid: Grid | None = None) -> DomainMask:
        grid = grid or self.grid.build()
        return DomainMask(grid, decode_cells(self.cells, grid.n_cells))

    @classmethod
    def of(cls, mask: DomainMask) -> "MaskSpec":
        return cls(grid=GridSpec.of(mask.grid), cells=encode_cells(mask.cells))
