# fracshape/shape/masks.py
import numpy as np
from scipy import ndimage

from fracshape.core.errors import ParameterError
from fracshape.grid.lattice import DomainMask, Grid


def cell_count(grid: Grid, volume: float, field: str = "volume") -> int:
    count = int(round(volume / grid.cell_volume))
    if count < 0 or count > grid.n_cells:
        raise ParameterError(field, f"{volume} needs {count} cells, the box holds {grid.n_cells}")
    return count


def ball_mask(grid: Grid, center, volume: float) -> DomainMask:
    """The round(volume / h^N) cells nearest to center; ties go to the lower cell index."""
    count = cell_count(grid, volume)
    center = np.asarray(center, dtype=float).reshape(grid.dim)
    offsets = (grid.cell_centers - center) / grid.h
    dist2 = np.round((offsets * offsets).sum(axis=1), 9)
    order = np.lexsort((np.arange(grid.n_cells), dist2))
    return DomainMask.from_indices(grid, order[:count])


# =========================
# COMPONENTS
# =========================
def components(mask: DomainMask) -> list[DomainMask]:
    """Face-connected components, largest first (ties by lowest cell index)."""
    labels, count = ndimage.label(mask.image())
    flat = labels.reshape(-1)
    parts = [DomainMask(mask.grid, flat == label) for label in range(1, count + 1)]
    return sorted(parts, key=lambda part: (-part.count, int(part.indices[0])))


def boundary_cells(mask: DomainMask) -> np.ndarray:
    """Active cells with a face neighbour outside the mask or outside the box."""
    interior = ndimage.binary_erosion(mask.image(), border_value=0)
    return np.flatnonzero(mask.cells & ~interior.reshape(-1))


def exterior_neighbours(mask: DomainMask) -> np.ndarray:
    grown = ndimage.binary_dilation(mask.image())
    return np.flatnonzero(grown.reshape(-1) & ~mask.cells)


def is_contiguous(mask: DomainMask) -> bool:
    return len(components(mask)) == 1
