# fracshape/shape/two_ball.py
"""Two balls of half volume pulled apart: lambda_2 of the union against lambda_1 of one ball."""

import numpy as np
import pandas as pd

from fracshape.core.errors import ParameterError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import Grid
from fracshape.grid.stiffness import StiffnessOperator, assemble_stiffness, restrict
from fracshape.shape.masks import ball_mask, cell_count
from fracshape.solvers.spectrum import eigenvalues

logger = get_logger(__name__)

COLUMNS = ["d", "lambda1_union", "lambda2_union", "lambda1_half_ball", "gap"]


def _gap_between(grid: Grid, first, second) -> float:
    """Distance between the closed cell unions (center distance less one cell along e_1)."""
    a = grid.cell_centers[first.indices]
    b = grid.cell_centers[second.indices]
    centers = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)).min()
    return float(centers - grid.h)


def two_ball_experiment(
    grid: Grid,
    s: float,
    total_volume: float,
    distances,
    base: StiffnessOperator | None = None,
) -> pd.DataFrame:
    base = base or assemble_stiffness(grid, s)
    half = total_volume / 2.0
    cells = cell_count(grid, half, "total_volume")
    if cells < 1:
        raise ParameterError("total_volume", f"{total_volume} leaves no cell per ball")
    # radius of the half ball measured along e_1
    r_half = cells * grid.h / 2.0 if grid.dim == 1 else np.sqrt(cells * grid.cell_volume / np.pi)
    e1 = np.eye(grid.dim)[0]

    rows = []
    for d in distances:
        center = -(d / 2.0 + r_half) * e1
        first = ball_mask(grid, center, half)
        second = first.reflect(axis=0)
        leftmost = grid.cell_centers[first.indices, 0].min() - grid.h / 2.0
        actual = _gap_between(grid, first, second) if not first.intersection(second).count else -1.0
        if leftmost < -grid.half_width - 1e-12 or center[0] - r_half < -grid.half_width - 1e-12:
            raise ParameterError("distances", f"d = {d} pushes the balls out of the box")
        if actual < 0 or actual < d - grid.h:
            # the snapped ball can reach past r_half along e_1; mirrored, that is the smallest clearance
            extent = grid.cell_centers[first.indices, 0].max() + grid.h / 2.0 - center[0]
            minimum = max(0.0, 2.0 * (extent - r_half))
            raise ParameterError(
                "distances", f"d = {d} makes the balls overlap; minimum feasible d is {minimum:.6g} (r_half = {r_half:.6g}, h = {grid.h:.6g})"
            )
        union = first.union(second)
        lam_union = eigenvalues(restrict(base, union), 2)
        lam_half = float(eigenvalues(restrict(base, first), 1)[0])
        rows.append([float(d), lam_union[0], lam_union[1], lam_half, lam_union[1] - lam_half])
        logger.debug("two balls at d=%s: gap %.6e", d, rows[-1][-1])
    return pd.DataFrame(rows, columns=COLUMNS)
