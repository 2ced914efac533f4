# fracshape/cc/cutoffs.py
"""
Radial cut-offs phi_R (1 on B_R, 0 off B_2R) and psi_R = sqrt(1 - phi_R^2), and the
localization defect of a grid function under them.
"""

import numpy as np

from fracshape.core.errors import ParameterError
from fracshape.grid.lattice import Grid, GridFunction
from fracshape.grid.stiffness import StiffnessOperator, gagliardo_sq

PROFILES = ("phi", "psi")


def _smoothstep(x: np.ndarray) -> np.ndarray:
    # quintic, C2 at both knots
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


def make_cutoffs(R: float):
    """Return (phi_R, psi_R) as functions of the radius."""
    if not R > 0:
        raise ParameterError("R", f"must be positive, got {R}")

    def phi(r) -> np.ndarray:
        return 1.0 - _smoothstep(np.asarray(r, dtype=float) / R - 1.0)

    def psi(r) -> np.ndarray:
        return np.sqrt(np.clip(1.0 - phi(r) ** 2, 0.0, 1.0))

    return phi, psi


def cutoff_function(grid: Grid, center, R: float, profile: str = "phi") -> GridFunction:
    if profile not in PROFILES:
        raise ParameterError("profile", f"expected one of {PROFILES}, got {profile!r}")
    phi, psi = make_cutoffs(R)
    center = np.asarray(center, dtype=float).reshape(grid.dim)
    radius = np.linalg.norm(grid.cell_centers - center, axis=1)
    return GridFunction(grid, phi(radius) if profile == "phi" else psi(radius))


def weighted_form(op: StiffnessOperator, u: GridFunction, chi: GridFunction) -> float:
    """1/2 sum_{i != j} k_ij chi_i^2 (u_i - u_j)^2 + sum_i rho_i chi_i^2 u_i^2."""
    values, weights = u.values, chi.values**2
    total = 0.0
    for start in range(0, values.size, 256):
        rows = slice(start, start + 256)
        jumps = values[rows, None] - values[None, :]
        total += float(weights[rows] @ (op.offdiag[rows] * jumps * jumps).sum(axis=1))
    return 0.5 * total + float(op.tail @ (weights * values * values))


def cutoff_defect(op: StiffnessOperator, u: GridFunction, center, R: float, profile: str = "phi") -> float:
    """|Q(chi u) - W_chi(u)| for chi = phi_R or psi_R centered at `center`."""
    chi = cutoff_function(op.grid, center, R, profile)
    return abs(gagliardo_sq(op, chi * u) - weighted_form(op, u, chi))
