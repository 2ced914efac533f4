# fracshape/cc/classify.py
"""
Trichotomy classification of a function sequence from its concentration
profiles on a geometric radius ladder R_j = h 2^j.

The finite-sequence surrogates below are heuristics; the report carries every
threshold it used.
"""

import numpy as np

from fracshape.cc.profile import profile_with_centers
from fracshape.cc.sequences import FunctionSequence
from fracshape.core.config import settings
from fracshape.core.errors import ParameterError
from fracshape.core.logger import get_logger
from fracshape.schemas.reports import TrichotomyReport

logger = get_logger(__name__)

MIN_LENGTH = 8


def radius_ladder(seq: FunctionSequence) -> np.ndarray:
    grid = seq.grid
    reach = 2.0 * np.sqrt(grid.dim) * grid.half_width
    count = int(np.ceil(np.log2(reach / grid.h))) + 1
    return grid.h * 2.0 ** np.arange(count)


def _first_reaching(row: np.ndarray, level: float) -> int | None:
    hits = np.flatnonzero(row >= level)
    return int(hits[0]) if hits.size else None


def _plateau(row: np.ndarray, low: float, high: float, slope: float) -> tuple[int, int] | None:
    """Longest run of ladder steps with both ends in (low, high) and relative slope < slope."""
    flat = [
        low < row[j] < high and low < row[j + 1] < high and abs(row[j + 1] - row[j]) < slope * row[j]
        for j in range(row.size - 1)
    ]
    best, start = None, None
    for j, ok in enumerate(flat + [False]):
        if ok and start is None:
            start = j
        elif not ok and start is not None:
            if best is None or j - start > best[1] - best[0]:
                best = (start, j)
            start = None
    return best


def classify(seq: FunctionSequence, epsilon: float, tolerances: dict | None = None) -> TrichotomyReport:
    tols = settings.tolerances(tolerances)
    lam = seq.mass_limit
    if len(seq) < MIN_LENGTH:
        raise ParameterError("sequence", f"needs at least {MIN_LENGTH} entries, got {len(seq)}")
    if not 0 < epsilon < lam / 4.0:
        raise ParameterError("epsilon", f"must lie in (0, {lam / 4.0:.6g}), got {epsilon}")
    seq.check_masses()

    grid = seq.grid
    radii = radius_ladder(seq)
    profiles, centers = zip(*(profile_with_centers(grid, u, radii) for u in seq.aligned))
    profiles = np.array(profiles)
    centers = np.array(centers)
    tail = range(seq.tail_start, len(seq))
    thresholds = {
        "epsilon": epsilon,
        "mass_limit": lam,
        "plateau_slope": tols["plateau_slope"],
        "tail_start": seq.tail_start,
    }
    report = dict(radii=radii.tolist(), profiles=profiles.tolist(), thresholds=thresholds, heuristic=True)

    # vanishing: the radius that held almost all the mass at the start loses it along the tail
    reach = _first_reaching(profiles[0], lam - epsilon)
    if reach is not None:
        decay = profiles[list(tail), reach]
        if decay[-1] < epsilon and np.all(np.diff(decay) < 0):
            thresholds["reach_radius"] = float(radii[reach])
            return TrichotomyReport(verdict="vanishing", **report)

    # compactness: the radius capturing lam - epsilon stays bounded along the tail
    reach = [_first_reaching(profiles[n], lam - epsilon) for n in tail]
    if all(j is not None for j in reach) and reach[-1] <= reach[0]:
        j_star = max(reach)
        thresholds["compact_radius"] = float(radii[j_star])
        points = grid.cell_centers[centers[:, j_star]]
        return TrichotomyReport(verdict="compactness", centers=points.tolist(), **report)

    # dichotomy: a mass plateau strictly between epsilon and lam - epsilon whose window widens
    windows = [_plateau(profiles[n], epsilon, lam - epsilon, tols["plateau_slope"]) for n in tail]
    if all(w is not None for w in windows):
        uppers = [w[1] for w in windows]
        if uppers[-1] > uppers[0] and np.all(np.diff(uppers) >= 0):
            levels = [profiles[n, w[0] : w[1] + 1].mean() for n, w in zip(tail, windows)]
            thresholds["plateau_windows"] = [[float(radii[a]), float(radii[b])] for a, b in windows]
            alpha = float(np.mean(levels))
            points = grid.cell_centers[centers[:, windows[-1][0]]]
            return TrichotomyReport(verdict="dichotomy", alpha=alpha, centers=points.tolist(), **report)

    logger.warning("classifier found no stable tail behaviour over %s entries", len(seq))
    return TrichotomyReport(verdict="inconclusive", **report)
