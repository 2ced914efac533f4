# fracshape/cc/split.py
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from fracshape.cc.cutoffs import cutoff_defect, cutoff_function
from fracshape.core.errors import ParameterError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import GridFunction
from fracshape.grid.stiffness import StiffnessOperator, gagliardo_sq

logger = get_logger(__name__)


@dataclass(frozen=True)
class SplitPair:
    v: GridFunction = field(repr=False)
    w: GridFunction = field(repr=False)
    support_gap: float
    mass_residual: float
    seminorm_defect: float
    tolerance: float
    within_bound: bool

    def to_dict(self) -> dict:
        return {
            "support_gap": self.support_gap,
            "mass_residual": self.mass_residual,
            "seminorm_defect": self.seminorm_defect,
            "tolerance": self.tolerance,
            "within_bound": self.within_bound,
            "mass_v": self.v.mass(),
            "mass_w": self.w.mass(),
        }


def support_distance(a: GridFunction, b: GridFunction) -> float:
    """Smallest distance between cell centers of the two supports; inf if one is empty."""
    ia, ib = np.flatnonzero(a.values), np.flatnonzero(b.values)
    if ia.size == 0 or ib.size == 0:
        return float("inf")
    centers = a.grid.cell_centers
    distances, _ = cKDTree(centers[ib]).query(centers[ia])
    return float(distances.min())


def dichotomy_split(op: StiffnessOperator, u: GridFunction, center, R1: float, R2: float) -> SplitPair:
    """
    v = phi_R1 u and w = psi_R2 u around `center`. R2 >= 2 R1 keeps the supports apart,
    and [u]^2 - [v]^2 - [w]^2 must stay above -2 (defect_phi(R1) + defect_psi(R2)).
    """
    if not R1 > 0:
        raise ParameterError("R1", f"must be positive, got {R1}")
    if R2 < 2.0 * R1:
        raise ParameterError("R2", f"must be at least 2 * R1 = {2.0 * R1}, got {R2}")
    v = cutoff_function(op.grid, center, R1, "phi") * u
    w = cutoff_function(op.grid, center, R2, "psi") * u
    seminorm_defect = gagliardo_sq(op, u) - gagliardo_sq(op, v) - gagliardo_sq(op, w)
    tolerance = 2.0 * (cutoff_defect(op, u, center, R1, "phi") + cutoff_defect(op, u, center, R2, "psi"))
    within = seminorm_defect >= -tolerance - 1e-12 * gagliardo_sq(op, u)
    if not within:
        logger.warning("split at R1=%s, R2=%s: defect %.3e below -%.3e", R1, R2, seminorm_defect, tolerance)
    return SplitPair(
        v=v,
        w=w,
        support_gap=support_distance(v, w),
        mass_residual=(u - v - w).norm(),
        seminorm_defect=seminorm_defect,
        tolerance=tolerance,
        within_bound=bool(within),
    )
