# fracshape/solvers/spectrum.py
"""
Lowest eigenpairs of the generalized problem A u = lambda h^N u on a mask.

Dense LAPACK below settings.DENSE_LIMIT active cells, LOBPCG above it with a
dense fallback when the residual target is missed.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import lobpcg

from fracshape.core.config import settings
from fracshape.core.errors import NumericError, ParameterError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import DomainMask, GridFunction
from fracshape.solvers.operator import DirichletOperator

logger = get_logger(__name__)


@dataclass(frozen=True)
class Spectrum:
    mask: DomainMask
    eigenvalues: np.ndarray
    eigenfunctions: list[GridFunction] = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return int(self.eigenvalues.size)

    def to_dict(self) -> dict:
        return {"eigenvalues": self.eigenvalues.tolist(), "residuals": self.residuals.tolist()}


def _check_k(op: DirichletOperator, k: int) -> None:
    if not 1 <= k <= op.size:
        raise ParameterError("k", f"must lie in [1, {op.size}], got {k}")


def _dense(op: DirichletOperator, k: int) -> tuple[np.ndarray, np.ndarray]:
    return linalg.eigh(op.matrix, subset_by_index=[0, k - 1])


def _iterative(op: DirichletOperator, k: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(settings.EIGEN_SEED)
    block = rng.standard_normal((op.size, min(k + 2, op.size)))
    mu, vectors = lobpcg(
        op.matrix, block, M=op.jacobi(), largest=False, tol=settings.tol("eig_rtol"), maxiter=500
    )
    order = np.argsort(mu)[:k]
    return mu[order], vectors[:, order]


def _residuals(op: DirichletOperator, mu: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    # relative residual of the Euclidean-normalized pair, ||A v - mu v|| / mu
    defect = op.matrix @ vectors - vectors * mu
    return np.linalg.norm(defect, axis=0) / mu


def eigenpairs(op: DirichletOperator, k: int) -> Spectrum:
    _check_k(op, k)
    if op.size <= settings.DENSE_LIMIT:
        mu, vectors = _dense(op, k)
    else:
        mu, vectors = _iterative(op, k)
        residuals = _residuals(op, mu, vectors)
        if residuals.max() > settings.tol("eig_rtol"):
            logger.warning(
                "lobpcg missed the residual target on %s cells (%.2e), using the dense solver",
                op.size,
                residuals.max(),
            )
            mu, vectors = _dense(op, k)

    residuals = _residuals(op, mu, vectors)
    if not np.all(mu > 0) or residuals.max() > settings.tol("eig_rtol"):
        raise NumericError(f"eigenpairs on {op.size} cells did not converge", float(residuals.max()))

    cell_volume = op.grid.cell_volume
    functions = []
    for j in range(k):
        v = vectors[:, j]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        functions.append(op.extend(v / np.sqrt(cell_volume)))
    logger.debug("eigenpairs on %s cells: lambda_1 = %.10g", op.size, mu[0] / cell_volume)
    return Spectrum(mask=op.mask, eigenvalues=mu / cell_volume, eigenfunctions=functions, residuals=residuals)


def eigenvalues(op: DirichletOperator, k: int) -> np.ndarray:
    """The k smallest eigenvalues; entries past the active cell count are +inf."""
    if k < 1:
        raise ParameterError("k", f"must be >= 1, got {k}")
    j = min(k, op.size)
    if op.size <= settings.DENSE_LIMIT:
        values = linalg.eigvalsh(op.matrix, subset_by_index=[0, j - 1]) / op.grid.cell_volume
    else:
        values = eigenpairs(op, j).eigenvalues
    return np.concatenate([values, np.full(k - j, np.inf)])


def poincare_constant(op: DirichletOperator) -> float:
    """Optimal C in ||u|| <= C [u] over functions vanishing off the mask: lambda_1^{-1/2}."""
    return float(eigenvalues(op, 1)[0] ** -0.5)
