# fracshape/shape/trajectory.py
from dataclasses import dataclass, field

import numpy as np

from fracshape.grid.lattice import DomainMask
from fracshape.grid.stiffness import StiffnessOperator, restrict
from fracshape.schemas.grid import encode_cells
from fracshape.solvers.linear import TorsionFunction, empty_torsion, solve_torsion


def torsion_of(base: StiffnessOperator, mask: DomainMask) -> TorsionFunction:
    if mask.is_empty:
        return empty_torsion(mask)
    return solve_torsion(restrict(base, mask))


@dataclass
class ShapeTrajectory:
    """Snapshots of a volume-constrained minimizing sequence."""

    masks: list[DomainMask]
    values: list[float]
    seed: int = 0
    iterations: list[int] = field(default_factory=list)
    torsions: list[TorsionFunction] = field(default_factory=list, repr=False)
    move_log: list[dict] = field(default_factory=list, repr=False)
    best_mask: DomainMask | None = None
    best_value: float = np.inf

    @classmethod
    def from_masks(
        cls, base: StiffnessOperator, masks: list[DomainMask], values=None, tail_length: int = 16
    ) -> "ShapeTrajectory":
        values = list(values) if values is not None else [np.nan] * len(masks)
        traj = cls(masks=list(masks), values=values, iterations=list(range(len(masks))))
        traj.attach_torsions(base, tail_length)
        finite = [(v, i) for i, v in enumerate(values) if np.isfinite(v)]
        if finite:
            traj.best_value, best = min(finite)
            traj.best_mask = masks[best]
        return traj

    def __len__(self) -> int:
        return len(self.masks)

    @property
    def volumes(self) -> list[float]:
        return [m.volume for m in self.masks]

    @property
    def best_values(self) -> list[float]:
        """Best value seen up to each snapshot, nonincreasing."""
        return np.minimum.accumulate(np.asarray(self.values, dtype=float)).tolist()

    def tail_indices(self) -> list[int]:
        """Last third of the snapshots, at least three when available."""
        count = max(3, int(np.ceil(len(self) / 3)))
        return list(range(max(0, len(self) - count), len(self)))

    def attach_torsions(self, base: StiffnessOperator, tail_length: int) -> None:
        self.torsions = [torsion_of(base, m) for m in self.masks[-tail_length:]]

    def tail_torsions(self) -> list[TorsionFunction]:
        """Torsions of the tail snapshots that carry one."""
        offset = len(self) - len(self.torsions)
        return [self.torsions[i - offset] for i in self.tail_indices() if i >= offset]

    def to_records(self) -> list[dict]:
        return [
            {"snapshot": n, "iteration": it, "cells": mask.count, "value": value, "mask": encode_cells(mask.cells)}
            for n, (it, mask, value) in enumerate(zip(self.iterations, self.masks, self.values))
        ]
