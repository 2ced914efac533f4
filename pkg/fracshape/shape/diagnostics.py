# fracshape/shape/diagnostics.py
"""
gamma-distance between masks, weak gamma limits of torsion tails, and the
compactness / dichotomy detector for set trajectories.
"""

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial import cKDTree

from fracshape.core.config import settings
from fracshape.core.errors import ParameterError, PreconditionError, StructuralError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import DomainMask, GridFunction
from fracshape.grid.stiffness import StiffnessOperator, restrict
from fracshape.schemas.reports import DichotomyReport, TailStep
from fracshape.shape.functionals import FunctionalSpec, eval_functional
from fracshape.shape.masks import ball_mask, components, exterior_neighbours
from fracshape.shape.trajectory import ShapeTrajectory, torsion_of
from fracshape.solvers.bounds import resolvent_norm_diff
from fracshape.solvers.linear import TorsionFunction
from fracshape.solvers.spectrum import eigenvalues

logger = get_logger(__name__)


def gamma_distance(base: StiffnessOperator, maskA: DomainMask, maskB: DomainMask) -> float:
    """||w_A - w_B|| in L2; empty masks contribute w = 0."""
    if maskA.grid != maskB.grid or maskA.grid != base.grid:
        raise StructuralError("masks live on different grids")
    return (torsion_of(base, maskA).values - torsion_of(base, maskB).values).norm()


def weak_gamma_limit(torsions: list[TorsionFunction], threshold: float = 1e-8) -> DomainMask:
    """{w > threshold * max w} for the last torsion of a converged tail."""
    w = torsions[-1].values
    peak = float(w.values.max()) if w.values.size else 0.0
    if peak <= 0.0:
        return DomainMask.empty(w.grid)
    return DomainMask(w.grid, w.values > threshold * peak)


def _pairwise_spread(functions: list[GridFunction]) -> float:
    spread = 0.0
    for i, a in enumerate(functions):
        for b in functions[i + 1 :]:
            spread = max(spread, (a - b).norm())
    return spread


def volume_semicontinuity_check(traj: ShapeTrajectory, tolerance: float | None = None) -> dict:
    """|limit set| <= min tail volume + one cell, for a tail converging in gamma distance."""
    torsions = traj.tail_torsions()
    if len(torsions) < 2:
        raise PreconditionError("trajectory tail carries fewer than two torsion functions")
    tolerance = settings.tol("gamma_cauchy") if tolerance is None else tolerance
    scale = max(t.values.norm() for t in torsions)
    spread = _pairwise_spread([t.values for t in torsions])
    if spread > tolerance * scale:
        raise PreconditionError(f"tail torsions spread {spread:.3e} exceeds {tolerance} * {scale:.3e}")
    limit = weak_gamma_limit(torsions)
    tail_volumes = [traj.masks[i].volume for i in traj.tail_indices()]
    bound = min(tail_volumes) + limit.grid.cell_volume
    return {
        "limit_volume": limit.volume,
        "min_tail_volume": min(tail_volumes),
        "holds": limit.volume <= bound + 1e-12,
        "spread": spread,
    }


def faber_krahn_check(base: StiffnessOperator, volume_cells: int, trials: int = 20, seed: int = 0) -> dict:
    """The centered ball has the smallest lambda_1 among random and shifted competitors of equal size."""
    grid = base.grid
    if not 1 <= volume_cells < grid.n_cells:
        raise ParameterError("volume_cells", f"must lie in [1, {grid.n_cells - 1}], got {volume_cells}")
    volume = volume_cells * grid.cell_volume
    ball = ball_mask(grid, np.zeros(grid.dim), volume)
    reference = float(eigenvalues(restrict(base, ball), 1)[0])
    rng = np.random.default_rng(seed)
    competitors = []
    for _ in range(trials):
        competitors.append(DomainMask.from_indices(grid, rng.choice(grid.n_cells, volume_cells, replace=False)))
        center = rng.uniform(-0.5, 0.5, grid.dim) * grid.half_width
        competitors.append(ball_mask(grid, center, volume))
    values = [float(eigenvalues(restrict(base, m), 1)[0]) for m in competitors]
    slack = min(values) - reference
    return {"ball_lambda1": reference, "min_competitor": min(values), "slack": slack, "holds": slack >= -1e-8 * reference}


def repair_volume(spec: FunctionalSpec, base: StiffnessOperator, mask: DomainMask, cells: int) -> DomainMask:
    """Grow the mask to `cells` cells, adding at each step the adjacent cell with the lowest J."""
    if cells < mask.count:
        raise ParameterError("cells", f"target {cells} is below the current {mask.count} cells")
    current = mask
    while current.count < cells:
        candidates = exterior_neighbours(current)
        if candidates.size == 0:
            candidates = np.flatnonzero(~current.cells)
        scored = [
            (eval_functional(spec, base, DomainMask.from_indices(base.grid, np.append(current.indices, c))), int(c))
            for c in candidates
        ]
        _, chosen = min(scored)
        current = DomainMask.from_indices(base.grid, np.append(current.indices, chosen))
    return current


# =========================
# DICHOTOMY DETECTOR
# =========================
def _cluster_pair(parts: list[DomainMask]) -> list[DomainMask]:
    """Merge components into at most two clusters by single linkage on their distances."""
    if len(parts) <= 2:
        return parts
    trees = [cKDTree(p.grid.cell_centers[p.indices]) for p in parts]
    condensed = []
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            d, _ = trees[j].query(parts[i].grid.cell_centers[parts[i].indices])
            condensed.append(float(d.min()))
    labels = fcluster(linkage(np.array(condensed), method="single"), t=2, criterion="maxclust")
    clusters = []
    for label in sorted(set(labels)):
        merged = DomainMask.empty(parts[0].grid)
        for part, lab in zip(parts, labels):
            if lab == label:
                merged = merged.union(part)
        clusters.append(merged)
    return sorted(clusters, key=lambda c: (-c.count, int(c.indices[0])))


def _separation(a: DomainMask, b: DomainMask) -> float:
    centers = a.grid.cell_centers
    d, _ = cKDTree(centers[b.indices]).query(centers[a.indices])
    return float(d.min())


def _recentered(w: GridFunction) -> GridFunction:
    weights = w.values
    total = weights.sum()
    if total <= 0:
        return w
    centroid = (w.grid.cell_centers * weights[:, None]).sum(axis=0) / total
    return w.translate(-np.round(centroid / w.grid.h).astype(np.int64))


def detect_dichotomy(
    traj: ShapeTrajectory,
    base: StiffnessOperator,
    spec: FunctionalSpec | None = None,
    tolerances: dict | None = None,
) -> DichotomyReport:
    if len(traj) == 0:
        raise PreconditionError("trajectory is empty")
    tols = settings.tolerances(tolerances)
    steps, clusters_per_step = [], []
    for n in traj.tail_indices():
        mask = traj.masks[n]
        parts = components(mask)
        debris_floor = tols["debris_fraction"] * mask.count
        kept = [p for p in parts if p.count >= debris_floor]
        debris = mask.count - sum(p.count for p in kept)
        clusters = _cluster_pair(kept)
        reduced = DomainMask.empty(mask.grid)
        for c in clusters:
            reduced = reduced.union(c)
        op = restrict(base, mask) if not mask.is_empty else None
        op_reduced = restrict(base, reduced) if not reduced.is_empty else None
        norm = 1.0 / float(eigenvalues(op, 1)[0]) if op is not None else 0.0
        step = TailStep(
            snapshot=n,
            cells=mask.count,
            clusters=len(clusters),
            separation=_separation(*clusters[:2]) if len(clusters) >= 2 else 0.0,
            cluster_volumes=[c.volume for c in clusters],
            debris_volume=debris * mask.grid.cell_volume,
            resolvent_gap=resolvent_norm_diff(op, op_reduced),
            resolvent_norm=norm,
        )
        if spec is not None:
            step.value = eval_functional(spec, base, reduced)
            step.repaired_value = eval_functional(spec, base, repair_volume(spec, base, reduced, mask.count))
        steps.append(step)
        clusters_per_step.append(clusters)

    separations = [s.separation for s in steps]
    report = dict(
        separations=separations,
        component_volumes=[s.cluster_volumes for s in steps],
        resolvent_gap=[s.resolvent_gap for s in steps],
        steps=steps,
    )

    two_clusters = all(s.clusters == 2 for s in steps)
    if two_clusters:
        increasing = all(b > a for a, b in zip(separations, separations[1:]))
        floor = all(min(s.cluster_volumes) >= tols["volume_floor_fraction"] * s.cells * base.grid.cell_volume for s in steps)
        small_gap = all(s.resolvent_gap <= tols["resolvent_gap_ratio"] * s.resolvent_norm for s in steps)
        clean = all(s.debris_volume <= tols["debris_fraction"] * s.cells * base.grid.cell_volume for s in steps)
        if increasing and floor and small_gap and clean:
            parts = [[c.indices.tolist() for c in clusters] for clusters in clusters_per_step]
            return DichotomyReport(verdict="dichotomy", components=parts, **report)

    torsions = [_recentered(torsion_of(base, traj.masks[n]).values) for n in traj.tail_indices()]
    scale = max(t.norm() for t in torsions)
    spread = _pairwise_spread(torsions)
    if scale > 0 and spread < tols["gamma_cauchy"] * scale:
        return DichotomyReport(verdict="compactness", torsion_spread=spread, **report)

    logger.warning("trajectory tail is neither compact nor split (spread %.3e)", spread)
    return DichotomyReport(verdict="inconclusive", torsion_spread=spread, **report)
