# fracshape/cc/sequences.py
"""
Function sequences on growing 1D grids and the synthetic families used to
exercise the trichotomy classifier.

Every generated grid has the same cell width and a half width that is a whole
number of cells, so all entries embed cell-aligned into the largest grid.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from fracshape.core.errors import ParameterError, StructuralError
from fracshape.grid.lattice import Grid, GridFunction, build_grid, embed

GENERATORS = ("translating_bump", "flattening_bump", "separating_pair")

CELL_WIDTH = 0.25
BUMP_RADIUS = 1.0
_MARGIN = 4.0


@dataclass(frozen=True)
class FunctionSequence:
    entries: list[GridFunction]

    def __post_init__(self):
        if len(self.entries) < 2:
            raise StructuralError("a sequence needs at least two entries")
        dims = {u.grid.dim for u in self.entries}
        if len(dims) != 1:
            raise StructuralError("entries mix grid dimensions")

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def grid(self) -> Grid:
        """The largest grid; every entry is compared after embedding into it."""
        return max((u.grid for u in self.entries), key=lambda g: g.half_width)

    @cached_property
    def aligned(self) -> list[GridFunction]:
        return [embed(u, self.grid) for u in self.entries]

    @property
    def tail_start(self) -> int:
        return len(self) - int(np.ceil(len(self) / 3))

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([u.mass() for u in self.entries])

    @cached_property
    def mass_limit(self) -> float:
        """lim int |u_n|^2, estimated as the mean over the last third."""
        return float(self.masses[self.tail_start :].mean())

    def check_masses(self, rtol: float = 0.1) -> None:
        tail = self.masses[self.tail_start :]
        if np.any(np.abs(tail - self.mass_limit) > rtol * self.mass_limit):
            raise StructuralError("tail masses drift more than 10% from the mass limit")


# =========================
# GENERATORS
# =========================
def _bump(x: np.ndarray, center: float, radius: float) -> np.ndarray:
    t = (x - center) / radius
    return np.where(np.abs(t) < 1.0, (1.0 - t * t) ** 2, 0.0)


def _grid_for(extent: float) -> Grid:
    cells = int(np.ceil((extent + _MARGIN) / CELL_WIDTH))
    return build_grid(1, cells * CELL_WIDTH, 2 * cells)


def _normalized(grid: Grid, values: np.ndarray, mass: float) -> GridFunction:
    u = GridFunction(grid, values)
    return u * np.sqrt(mass / u.mass())


def translating_bump(length: int = 10, seed: int = 0, mass: float = 1.0) -> FunctionSequence:
    """A fixed bump moving along e_1 at a jittered speed."""
    rng = np.random.default_rng(seed)
    step = 2.0 + 0.5 * rng.random()
    entries = []
    for n in range(length):
        center = np.round(n * step / CELL_WIDTH) * CELL_WIDTH
        grid = _grid_for(abs(center) + BUMP_RADIUS)
        x = grid.cell_centers[:, 0]
        entries.append(_normalized(grid, _bump(x, center, BUMP_RADIUS), mass))
    return FunctionSequence(entries)


def flattening_bump(length: int = 10, seed: int = 0, mass: float = 1.0, max_scale: float = 45.0) -> FunctionSequence:
    """n^{-N/2} phi(x / n) style spreading: the profile widens geometrically up to max_scale."""
    rng = np.random.default_rng(seed)
    start = 1.0 + 0.3 * rng.random()
    scales = start * (max_scale / start) ** (np.arange(length) / (length - 1))
    entries = []
    for scale in scales:
        grid = _grid_for(scale * BUMP_RADIUS)
        x = grid.cell_centers[:, 0]
        entries.append(_normalized(grid, _bump(x, 0.0, scale * BUMP_RADIUS), mass))
    return FunctionSequence(entries)


def separating_pair(length: int = 10, seed: int = 0, bump_mass: float = 0.4) -> FunctionSequence:
    """phi(x) + phi(x - D_n e_1) with geometrically growing D_n; each bump carries bump_mass."""
    rng = np.random.default_rng(seed)
    start = 4.0 + rng.random()
    entries = []
    for n in range(length):
        distance = np.round(start * 2.0 ** (n / 2.0) / CELL_WIDTH) * CELL_WIDTH
        grid = _grid_for(distance + BUMP_RADIUS)
        x = grid.cell_centers[:, 0]
        left = _normalized(grid, _bump(x, 0.0, BUMP_RADIUS), bump_mass)
        right = _normalized(grid, _bump(x, distance, BUMP_RADIUS), bump_mass)
        entries.append(left + right)
    return FunctionSequence(entries)


def generate(name: str, length: int = 10, seed: int = 0) -> FunctionSequence:
    if name not in GENERATORS:
        raise ParameterError("generator", f"expected one of {GENERATORS}, got {name!r}")
    return {"translating_bump": translating_bump, "flattening_bump": flattening_bump, "separating_pair": separating_pair}[
        name
    ](length=length, seed=seed)
