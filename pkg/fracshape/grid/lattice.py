# fracshape/grid/lattice.py
"""
Uniform lattices over a box, cell masks and grid functions.

Cells are stored in C order; a 2D cell (i, j) has flat index i * resolution + j
and center (x_i, x_j) with x_i = -half_width + (i + 1/2) h.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from fracshape.core.errors import ParameterError, StructuralError

# dense assembly budget on the number of cells
MAX_CELLS = 16384


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float
    resolution: int

    @cached_property
    def h(self) -> float:
        return 2.0 * self.half_width / self.resolution

    @cached_property
    def n_cells(self) -> int:
        return self.resolution**self.dim

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.dim

    @cached_property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.resolution) + 0.5) * self.h

    @cached_property
    def lattice_index(self) -> np.ndarray:
        """Integer lattice coordinates of every cell, shape (M, dim)."""
        coords = np.indices(self.shape).reshape(self.dim, -1).T
        return coords.astype(np.int64)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        return -self.half_width + (self.lattice_index + 0.5) * self.h

    def to_dict(self) -> dict:
        return {"dim": self.dim, "half_width": self.half_width, "resolution": self.resolution}


def build_grid(dim: int, half_width: float, resolution: int) -> Grid:
    if dim not in (1, 2):
        raise ParameterError("dim", f"must be 1 or 2, got {dim}")
    if not half_width > 0:
        raise ParameterError("half_width", f"must be positive, got {half_width}")
    if int(resolution) != resolution or resolution < 2:
        raise ParameterError("resolution", f"must be an integer >= 2, got {resolution}")
    if resolution**dim > MAX_CELLS:
        raise ParameterError("resolution", f"resolution^dim = {resolution**dim} exceeds {MAX_CELLS} cells")
    return Grid(dim=int(dim), half_width=float(half_width), resolution=int(resolution))


def require_same_grid(*items) -> Grid:
    grids = {item.grid for item in items if item is not None}
    if len(grids) != 1:
        raise StructuralError("objects live on different grids")
    return grids.pop()


# =========================
# MASKS
# =========================
@dataclass(frozen=True, eq=False)
class DomainMask:
    grid: Grid
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool).reshape(-1)
        if cells.size != self.grid.n_cells:
            raise StructuralError(f"mask has {cells.size} cells, grid has {self.grid.n_cells}")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def empty(cls, grid: Grid) -> "DomainMask":
        return cls(grid, np.zeros(grid.n_cells, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "DomainMask":
        return cls(grid, np.ones(grid.n_cells, dtype=bool))

    @classmethod
    def from_indices(cls, grid: Grid, indices) -> "DomainMask":
        cells = np.zeros(grid.n_cells, dtype=bool)
        cells[np.asarray(indices, dtype=np.int64)] = True
        return cls(grid, cells)

    @cached_property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.cells)

    @property
    def count(self) -> int:
        return int(self.indices.size)

    @property
    def volume(self) -> float:
        return self.count * self.grid.cell_volume

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    def image(self) -> np.ndarray:
        return self.cells.reshape(self.grid.shape)

    def union(self, other: "DomainMask") -> "DomainMask":
        require_same_grid(self, other)
        return DomainMask(self.grid, self.cells | other.cells)

    def intersection(self, other: "DomainMask") -> "DomainMask":
        require_same_grid(self, other)
        return DomainMask(self.grid, self.cells & other.cells)

    def difference(self, other: "DomainMask") -> "DomainMask":
        require_same_grid(self, other)
        return DomainMask(self.grid, self.cells & ~other.cells)

    def issubset(self, other: "DomainMask") -> bool:
        require_same_grid(self, other)
        return not np.any(self.cells & ~other.cells)

    def translate(self, shift) -> "DomainMask | None":
        """Shift by whole cells; None when a cell would leave the box."""
        shift = np.asarray(shift, dtype=np.int64).reshape(self.grid.dim)
        coords = self.grid.lattice_index[self.indices] + shift
        if coords.size and (coords.min() < 0 or coords.max() >= self.grid.resolution):
            return None
        flat = np.ravel_multi_index(tuple(coords.T), self.grid.shape) if coords.size else []
        return DomainMask.from_indices(self.grid, flat)

    def reflect(self, axis: int = 0) -> "DomainMask":
        """Mirror image through the box center along one axis."""
        return DomainMask(self.grid, np.flip(self.image(), axis=axis).reshape(-1))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DomainMask)
            and self.grid == other.grid
            and bool(np.array_equal(self.cells, other.cells))
        )

    def __hash__(self) -> int:
        return hash((self.grid, self.cells.tobytes()))


# =========================
# GRID FUNCTIONS
# =========================
@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.grid.n_cells:
            raise StructuralError(f"function has {values.size} values, grid has {self.grid.n_cells}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_cells))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        """Sample fn at cell centers; fn receives an (M, dim) array."""
        return cls(grid, fn(grid.cell_centers))

    def image(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def inner(self, other: "GridFunction") -> float:
        require_same_grid(self, other)
        return float(self.grid.cell_volume * np.dot(self.values, other.values))

    def mass(self) -> float:
        """L2 mass, the integral of |u|^2."""
        return float(self.grid.cell_volume * np.dot(self.values, self.values))

    def norm(self) -> float:
        return float(np.sqrt(self.mass()))

    def integral(self) -> float:
        return float(self.grid.cell_volume * self.values.sum())

    def support(self) -> DomainMask:
        return DomainMask(self.grid, self.values != 0.0)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        require_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        require_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, factor) -> "GridFunction":
        if isinstance(factor, GridFunction):
            require_same_grid(self, factor)
            return GridFunction(self.grid, self.values * factor.values)
        return GridFunction(self.grid, self.values * factor)

    __rmul__ = __mul__

    def __abs__(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values))

    def translate(self, shift) -> "GridFunction":
        """Shift by whole cells; values pushed out of the box are dropped."""
        shift = np.asarray(shift, dtype=np.int64).reshape(self.grid.dim)
        out = np.zeros(self.grid.shape)
        src = []
        dst = []
        for delta, n in zip(shift, self.grid.shape):
            lo, hi = max(0, -delta), min(n, n - delta)
            src.append(slice(lo, max(lo, hi)))
            dst.append(slice(lo + delta, max(lo, hi) + delta))
        out[tuple(dst)] = self.image()[tuple(src)]
        return GridFunction(self.grid, out.reshape(-1))


def embed(u: GridFunction, target: Grid) -> GridFunction:
    """Place u into a larger grid with the same cell width, aligning cell centers."""
    source = u.grid
    if source.dim != target.dim:
        raise StructuralError("cannot embed across dimensions")
    if not np.isclose(source.h, target.h, rtol=1e-12, atol=0.0):
        raise StructuralError(f"cell widths differ: {source.h} vs {target.h}")
    offset = (target.half_width - source.half_width) / target.h
    if abs(offset - round(offset)) > 1e-9 or offset < -1e-9:
        raise StructuralError("grid cells are not aligned or the target box is smaller")
    offset = int(round(offset))
    out = np.zeros(target.shape)
    window = tuple(slice(offset, offset + n) for n in source.shape)
    out[window] = u.image()
    return GridFunction(target, out.reshape(-1))
