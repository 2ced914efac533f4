# fracshape/solvers/bounds.py
"""
Operator-norm distances between resolvents, the torsion/resolvent estimate,
variational capacity and convergence diagnostics along mask ladders.
"""

import numpy as np
from scipy import linalg

from fracshape.core.config import settings
from fracshape.core.errors import NumericError, StructuralError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import DomainMask, GridFunction
from fracshape.grid.stiffness import StiffnessOperator, gagliardo_sq, restrict
from fracshape.solvers.linear import apply_resolvent, solve_torsion
from fracshape.solvers.operator import DirichletOperator

logger = get_logger(__name__)


# =========================
# RESOLVENT DISTANCE
# =========================
def _dense_inverse(op: DirichletOperator) -> np.ndarray:
    factor = linalg.cho_factor(op.matrix)
    return linalg.cho_solve(factor, np.eye(op.size))


def _union_indices(opA: DirichletOperator | None, opB: DirichletOperator | None) -> np.ndarray:
    cells = [op.mask.cells for op in (opA, opB) if op is not None]
    return np.flatnonzero(np.logical_or.reduce(cells))


def _power_norm(opA: DirichletOperator | None, opB: DirichletOperator | None, grid) -> float:
    rtol = settings.tol("power_rtol")
    rng = np.random.default_rng(settings.EIGEN_SEED)
    union = _union_indices(opA, opB)
    x = np.zeros(grid.n_cells)
    x[union] = rng.standard_normal(union.size)

    def apply(values: np.ndarray) -> np.ndarray:
        f = GridFunction(grid, values)
        out = np.zeros(grid.n_cells)
        if opA is not None:
            out += apply_resolvent(opA, f).values
        if opB is not None:
            out -= apply_resolvent(opB, f).values
        return out

    estimate = 0.0
    for it in range(1, 2001):
        x /= np.linalg.norm(x)
        y = apply(apply(x))
        updated = float(np.sqrt(np.linalg.norm(y)))
        if abs(updated - estimate) <= rtol * updated:
            logger.debug("power iteration converged after %s steps", it)
            return updated
        estimate = updated
        x = y
        if updated == 0.0:
            return 0.0
    raise NumericError("power iteration on the resolvent difference stagnated", estimate)


def resolvent_norm_diff(opA: DirichletOperator | None, opB: DirichletOperator | None) -> float:
    """
    ||R_A - R_B|| in L(L^2), both resolvents extended by zero.

    None stands for the empty set, whose resolvent is the null operator.
    """
    present = [op for op in (opA, opB) if op is not None]
    if not present:
        return 0.0
    grid = present[0].grid
    if any(op.grid != grid for op in present):
        raise StructuralError("resolvents live on different grids")
    union = _union_indices(opA, opB)
    if union.size > settings.DENSE_LIMIT:
        return _power_norm(opA, opB, grid)

    position = {cell: i for i, cell in enumerate(union)}
    diff = np.zeros((union.size, union.size))
    for op, sign in ((opA, 1.0), (opB, -1.0)):
        if op is None:
            continue
        where = np.array([position[c] for c in op.active_index])
        diff[np.ix_(where, where)] += sign * _dense_inverse(op)
    diff *= grid.cell_volume
    diff = 0.5 * (diff + diff.T)
    return float(np.max(np.abs(linalg.eigvalsh(diff))))


# =========================
# TORSION vs RESOLVENT
# =========================
def torsion_resolvent_bound_check(
    opA: DirichletOperator, opB: DirichletOperator, f: GridFunction | None = None
) -> dict:
    """
    Compare ||R_A - R_B|| with ||w_A - w_B|| for nested masks B in A, and check
    the duality identity  int (R_A f - R_B f) = int f (w_A - w_B).
    """
    if opA.grid != opB.grid:
        raise StructuralError("operators live on different grids")
    if not opB.mask.issubset(opA.mask):
        raise StructuralError("the second mask must be contained in the first")
    f = GridFunction(opA.grid, np.ones(opA.grid.n_cells)) if f is None else f
    lhs = resolvent_norm_diff(opA, opB)
    w_gap = solve_torsion(opA).values - solve_torsion(opB).values
    distance = w_gap.norm()
    resolved = (apply_resolvent(opA, f) - apply_resolvent(opB, f)).integral()
    duality_residual = abs(resolved - f.inner(w_gap))
    return {
        "lhs": lhs,
        "torsion_distance": distance,
        "duality_residual": duality_residual,
        "constant": lhs / distance if distance > 0 else 0.0,
    }


def fit_holder_exponent(lhs, distances) -> dict:
    """Least-squares fit of log lhs = log C + alpha log distance; zero pairs are skipped."""
    lhs = np.asarray(lhs, dtype=float)
    distances = np.asarray(distances, dtype=float)
    keep = (lhs > 0) & (distances > 0)
    if keep.sum() < 2:
        return {"alpha": None, "constant": None, "points": int(keep.sum())}
    alpha, log_c = np.polyfit(np.log(distances[keep]), np.log(lhs[keep]), 1)
    return {"alpha": float(alpha), "constant": float(np.exp(log_c)), "points": int(keep.sum())}


# =========================
# ENERGY / CONVERGENCE
# =========================
def energy_identity(op: DirichletOperator) -> dict:
    """[w]^2 = int w for the torsion function."""
    w = solve_torsion(op).values
    energy = gagliardo_sq(op.base, w)
    integral = w.integral()
    return {"energy": energy, "integral": integral, "relative_gap": abs(energy - integral) / integral}


def projection_gap(opA: DirichletOperator, opB: DirichletOperator, competitor: GridFunction) -> float:
    """Q(w_A - v) - Q(w_A - w_B) for v supported in the smaller mask; nonnegative."""
    if not competitor.support().issubset(opB.mask):
        raise StructuralError("competitor must vanish off the smaller mask")
    wA = solve_torsion(opA).values
    wB = solve_torsion(opB).values
    return gagliardo_sq(opA.base, wA - competitor) - gagliardo_sq(opA.base, wA - wB)


def strong_convergence_check(base: StiffnessOperator, masks: list[DomainMask]) -> list[dict]:
    """Along an increasing ladder: L2 distance, energy distance and mass gap to the last torsion."""
    for inner, outer in zip(masks, masks[1:]):
        if not inner.issubset(outer):
            raise StructuralError("masks must increase along the ladder")
    limit = solve_torsion(restrict(base, masks[-1])).values
    rows = []
    for n, mask in enumerate(masks):
        w = solve_torsion(restrict(base, mask)).values
        gap = limit - w
        rows.append(
            {
                "step": n,
                "cells": mask.count,
                "l2_distance": gap.norm(),
                "energy_distance": gagliardo_sq(base, gap),
                "integral_gap": limit.integral() - w.integral(),
            }
        )
    return rows


# =========================
# CAPACITY
# =========================
def capacity_estimate(base: StiffnessOperator, mask: DomainMask) -> float:
    """
    Projected gradient for min Q(u) subject to u >= 1 on the mask, step 1 / (2 max d)
    on the gradient 2 A u.
    """
    if mask.grid != base.grid:
        raise StructuralError("mask and operator live on different grids")
    if mask.is_empty:
        return 0.0
    tols = settings.tolerances()
    window = int(tols["capacity_window"])
    A = base.matrix
    step = 1.0 / float(base.diag.max())
    constrained = mask.cells
    u = constrained.astype(np.float64)
    energy = float(u @ (A @ u))
    reference = energy
    for it in range(1, int(tols["capacity_max_iter"]) + 1):
        u = u - step * (A @ u)
        u[constrained] = np.maximum(u[constrained], 1.0)
        if it % window == 0:
            energy = float(u @ (A @ u))
            if reference - energy <= tols["capacity_rtol"] * energy:
                logger.debug("capacity of %s cells after %s steps: %.10g", mask.count, it, energy)
                return energy
            reference = energy
    raise NumericError(f"capacity iteration exceeded {tols['capacity_max_iter']} steps", energy)
