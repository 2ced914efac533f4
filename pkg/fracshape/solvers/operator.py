# fracshape/solvers/operator.py
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse.linalg import LinearOperator

from fracshape.grid.lattice import DomainMask, Grid, GridFunction

if TYPE_CHECKING:
    from fracshape.grid.stiffness import StiffnessOperator


@dataclass(frozen=True, eq=False)
class DirichletOperator:
    """Stiffness form restricted to the cells of a nonempty mask."""

    base: "StiffnessOperator"
    mask: DomainMask

    @property
    def grid(self) -> Grid:
        return self.base.grid

    @cached_property
    def active_index(self) -> np.ndarray:
        return self.mask.indices

    @property
    def size(self) -> int:
        return int(self.active_index.size)

    @cached_property
    def matrix(self) -> np.ndarray:
        idx = self.active_index
        A = self.base.matrix[np.ix_(idx, idx)]
        A.setflags(write=False)
        return A

    @cached_property
    def diag(self) -> np.ndarray:
        return self.base.diag[self.active_index]

    def jacobi(self) -> LinearOperator:
        inv = 1.0 / self.diag
        return LinearOperator((self.size, self.size), matvec=lambda x: inv * np.ravel(x), dtype=np.float64)

    def gather(self, u: GridFunction) -> np.ndarray:
        return u.values[self.active_index]

    def extend(self, values: np.ndarray) -> GridFunction:
        """Zero extension of active-cell values to the whole grid."""
        full = np.zeros(self.grid.n_cells)
        full[self.active_index] = values
        return GridFunction(self.grid, full)

    def quadratic_form(self, values: np.ndarray) -> float:
        return float(values @ (self.matrix @ values))
