# fracshape/solvers/linear.py
"""Torsion functions and resolvent applications by preconditioned conjugate gradients."""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import cg

from fracshape.core.config import settings
from fracshape.core.errors import NumericError, StructuralError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import DomainMask, GridFunction
from fracshape.solvers.operator import DirichletOperator

logger = get_logger(__name__)


@dataclass(frozen=True)
class TorsionFunction:
    mask: DomainMask
    values: GridFunction
    residual: float

    def integral(self) -> float:
        return self.values.integral()


def _solve(op: DirichletOperator, rhs: np.ndarray, rtol: float | None = None) -> tuple[np.ndarray, float]:
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros(op.size), 0.0
    rtol = settings.tol("cg_rtol") if rtol is None else rtol
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = cg(op.matrix, rhs, rtol=rtol, atol=0.0, maxiter=10 * op.size, M=op.jacobi(), callback=count)
    residual = float(np.linalg.norm(op.matrix @ x - rhs)) / rhs_norm
    if info > 0:
        raise NumericError(f"conjugate gradients stopped after {info} iterations on {op.size} cells", residual)
    logger.debug("cg on %s cells: %s iterations, relative residual %.2e", op.size, iterations, residual)
    return x, residual


def solve_torsion(op: DirichletOperator) -> TorsionFunction:
    """w solving A w = h^N on the mask, zero outside."""
    rhs = np.full(op.size, op.grid.cell_volume)
    w, residual = _solve(op, rhs)
    return TorsionFunction(mask=op.mask, values=op.extend(w), residual=residual)


def apply_resolvent(op: DirichletOperator, f: GridFunction) -> GridFunction:
    if f.grid != op.grid:
        raise StructuralError("right-hand side lives on a different grid")
    u, _ = _solve(op, op.grid.cell_volume * op.gather(f))
    return op.extend(u)


def empty_torsion(mask: DomainMask) -> TorsionFunction:
    """w of the empty set: the null function."""
    return TorsionFunction(mask=mask, values=GridFunction.zeros(mask.grid), residual=0.0)
