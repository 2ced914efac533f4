# fracshape/cc/profile.py
"""Levy concentration function Q(R) = max_y mass of |u|^2 in B_R(y), y over cell centers."""

import numpy as np
from scipy import ndimage

from fracshape.core.errors import ParameterError, StructuralError
from fracshape.grid.lattice import Grid, GridFunction

_RADIUS_TOL = 1e-9


def ball_footprint(grid: Grid, R: float) -> np.ndarray:
    """Lattice offsets within distance R of a cell center, as a boolean stencil."""
    reach = min(int(np.floor(R / grid.h + _RADIUS_TOL)), grid.resolution - 1)
    axis = np.arange(-reach, reach + 1)
    grids = np.meshgrid(*([axis] * grid.dim), indexing="ij")
    dist2 = sum(g.astype(np.float64) ** 2 for g in grids)
    return dist2 * grid.h**2 <= (R + _RADIUS_TOL * grid.h) ** 2


def ball_masses(grid: Grid, u: GridFunction, R: float) -> np.ndarray:
    """Mass of |u|^2 in the ball of radius R around every cell center."""
    density = (u.values**2 * grid.cell_volume).reshape(grid.shape)
    footprint = ball_footprint(grid, R)
    return ndimage.correlate(density, footprint.astype(np.float64), mode="constant", cval=0.0).reshape(-1)


def profile_with_centers(grid: Grid, u: GridFunction, radii) -> tuple[np.ndarray, np.ndarray]:
    """Q(R) for each radius together with the maximizing cell index."""
    if u.grid != grid:
        raise StructuralError("function lives on a different grid")
    radii = np.asarray(radii, dtype=float)
    if radii.size and (radii.min() <= 0 or np.any(np.diff(radii) <= 0)):
        raise ParameterError("radii", "must be positive and strictly ascending")
    total = u.mass()
    values = np.zeros(radii.size)
    centers = np.zeros(radii.size, dtype=np.int64)
    for j, R in enumerate(radii):
        masses = ball_masses(grid, u, R)
        centers[j] = int(np.argmax(masses))
        values[j] = masses[centers[j]]
    # larger balls contain smaller ones; clamp away correlate round-off
    values = np.minimum(np.maximum.accumulate(values), total)
    return values, centers


def concentration_profile(grid: Grid, u: GridFunction, radii) -> np.ndarray:
    return profile_with_centers(grid, u, radii)[0]
