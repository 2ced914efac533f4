# fracshape/shape/annealing.py
"""
Simulated-annealing exchange walk for min J(mask) at fixed cell count.

A move drops one mask cell and adds one exterior cell, so the volume is
preserved exactly. Moves with dJ < 0 are taken; others with probability exp(-dJ / T).
The temperature decays geometrically down to a floor of temperature_floor * T0.
"""

from dataclasses import dataclass

import numpy as np

from fracshape.core.errors import ParameterError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import DomainMask
from fracshape.grid.stiffness import StiffnessOperator
from fracshape.shape.functionals import FunctionalSpec, eval_functional
from fracshape.shape.masks import ball_mask, boundary_cells, cell_count, exterior_neighbours
from fracshape.shape.trajectory import ShapeTrajectory

logger = get_logger(__name__)


@dataclass(frozen=True)
class AnnealingSchedule:
    t0: float | None = None  # None: |J0| / 10
    decay: float = 0.995
    record_every: int = 50
    tail_length: int = 16
    jump_probability: float = 0.1
    temperature_floor: float = 1e-2  # fraction of T0

    def __post_init__(self):
        if not 0 < self.decay <= 1:
            raise ParameterError("decay", f"must lie in (0, 1], got {self.decay}")
        if self.record_every < 1 or self.tail_length < 1:
            raise ParameterError("record_every", "record_every and tail_length must be positive")
        if not 0 <= self.jump_probability <= 1:
            raise ParameterError("jump_probability", f"must lie in [0, 1], got {self.jump_probability}")
        if not 0 <= self.temperature_floor <= 1:
            raise ParameterError("temperature_floor", f"must lie in [0, 1], got {self.temperature_floor}")


def propose_exchange(mask: DomainMask, rng: np.random.Generator, jump_probability: float) -> tuple[int, int]:
    """
    Draw (removed, added). Each side is global with probability jump_probability:
    any mask cell instead of a boundary cell, any exterior cell instead of a face neighbour.
    A global removal can open a hole, which is the only way a connected mask splits.
    """
    if rng.random() < jump_probability:
        removed = int(rng.choice(mask.indices))
    else:
        removed = int(rng.choice(boundary_cells(mask)))
    neighbours = exterior_neighbours(mask)
    if neighbours.size and rng.random() >= jump_probability:
        added = int(rng.choice(neighbours))
    else:
        added = int(rng.choice(np.flatnonzero(~mask.cells)))
    return removed, added


def minimize_shape(
    spec: FunctionalSpec,
    base: StiffnessOperator,
    c: float,
    iterations: int,
    seed: int = 0,
    schedule: AnnealingSchedule | None = None,
    initial: DomainMask | None = None,
) -> ShapeTrajectory:
    schedule = schedule or AnnealingSchedule()
    grid = base.grid
    cells = cell_count(grid, c, "c")
    if cells < 2 or cells >= grid.n_cells or abs(cells * grid.cell_volume - c) > 1e-9 * max(c, 1.0):
        raise ParameterError("c", f"must be m * h^N with 2 <= m < {grid.n_cells}, got {c}")
    if iterations < 0:
        raise ParameterError("iterations", f"must be >= 0, got {iterations}")

    rng = np.random.default_rng(seed)
    mask = initial if initial is not None else ball_mask(grid, np.zeros(grid.dim), c)
    if mask.count != cells:
        raise ParameterError("initial", f"initial mask has {mask.count} cells, expected {cells}")
    value = eval_functional(spec, base, mask)
    temperature = schedule.t0 if schedule.t0 is not None else abs(value) / 10.0
    floor = temperature * schedule.temperature_floor

    traj = ShapeTrajectory(masks=[mask], values=[value], seed=seed, iterations=[0], best_mask=mask, best_value=value)
    for it in range(1, iterations + 1):
        removed, added = propose_exchange(mask, rng, schedule.jump_probability)
        cells_new = mask.cells.copy()
        cells_new[removed], cells_new[added] = False, True
        candidate = DomainMask(grid, cells_new)
        candidate_value = eval_functional(spec, base, candidate)
        delta = candidate_value - value
        accept = delta < 0 or (temperature > 0 and rng.random() < np.exp(-delta / temperature))
        if accept:
            mask, value = candidate, candidate_value
            traj.move_log.append({"iteration": it, "removed": removed, "added": added, "delta": float(delta)})
            if value < traj.best_value:
                traj.best_mask, traj.best_value = mask, value
        temperature = max(temperature * schedule.decay, floor)
        if it % schedule.record_every == 0 or it == iterations:
            traj.masks.append(mask)
            traj.values.append(value)
            traj.iterations.append(it)
        if it % 1000 == 0:
            logger.info("annealing %s: iteration %s, J = %.8g, best %.8g, T = %.3e", spec.name, it, value, traj.best_value, temperature)

    traj.attach_torsions(base, schedule.tail_length)
    logger.debug("annealing finished with %s accepted moves", len(traj.move_log))
    return traj
