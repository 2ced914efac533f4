# fracshape/experiments/audit.py
"""
Inequality audit over randomized masks.

Every check draws its instances from one seeded generator, returns the worst
slack it measured (negative means violated) and never raises for a failed
inequality: the report carries the verdict.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import pandas as pd

from fracshape.cc.lieb import lieb_translation_search
from fracshape.cc.split import dichotomy_split
from fracshape.core.errors import FracShapeError, InvariantViolation, ParameterError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import DomainMask, GridFunction
from fracshape.grid.stiffness import StiffnessOperator, gagliardo_sq, polya_szego_abs_check, restrict
from fracshape.schemas.reports import AuditReport, CheckResult
from fracshape.shape.diagnostics import faber_krahn_check, gamma_distance
from fracshape.shape.functionals import FunctionalSpec, eval_functional
from fracshape.shape.masks import ball_mask
from fracshape.solvers.bounds import (
    capacity_estimate,
    energy_identity,
    projection_gap,
    resolvent_norm_diff,
    strong_convergence_check,
    torsion_resolvent_bound_check,
)
from fracshape.solvers.linear import solve_torsion
from fracshape.solvers.spectrum import eigenpairs, eigenvalues, poincare_constant

logger = get_logger(__name__)

K_MAX = 3


@dataclass
class AuditCase:
    base: StiffnessOperator
    rng: np.random.Generator
    trials: int

    @property
    def grid(self):
        return self.base.grid

    def random_mask(self, low: float = 0.3, high: float = 0.7) -> DomainMask:
        n = self.grid.n_cells
        count = int(self.rng.integers(max(2, int(low * n)), max(3, int(high * n)) + 1))
        return DomainMask.from_indices(self.grid, self.rng.choice(n, min(count, n), replace=False))

    def nested_pair(self) -> tuple[DomainMask, DomainMask]:
        """(inner, outer) with inner a nonempty proper subset of outer."""
        outer = self.random_mask()
        cells = outer.indices
        keep = int(self.rng.integers(1, cells.size))
        inner = DomainMask.from_indices(self.grid, self.rng.choice(cells, keep, replace=False))
        return inner, outer

    def random_function(self, mask: DomainMask | None = None) -> GridFunction:
        values = self.rng.standard_normal(self.grid.n_cells)
        if mask is not None:
            values = np.where(mask.cells, values, 0.0)
        return GridFunction(self.grid, values)


@dataclass(frozen=True)
class Check:
    name: str
    invariant: str
    description: str
    run: Callable[[AuditCase], tuple[float, dict]]


CHECKS: dict[str, Check] = {}


def check(name: str, invariant: str, description: str):
    def register(fn):
        CHECKS[name] = Check(name, invariant, description, fn)
        return fn

    return register


def list_checks() -> list[dict]:
    return [{"name": c.name, "invariant": c.invariant, "description": c.description} for c in CHECKS.values()]


# =========================
# STIFFNESS STRUCTURE
# =========================
@check("symmetry", "stiffness-symmetric", "k_ij = k_ji for every pair")
def _symmetry(case: AuditCase):
    off = case.base.offdiag
    asym = float(np.abs(off - off.T).max())
    return -asym, {"max_asymmetry": asym}


@check("m-matrix", "nonnegative-couplings", "k_ij >= 0 and every exterior weight positive")
def _m_matrix(case: AuditCase):
    off = case.base.offdiag
    lowest = min(float(off.min()), float(case.base.tail.min()))
    return lowest, {"min_coupling": float(off.min()), "min_tail": float(case.base.tail.min())}


@check("positivity", "positive-energy", "Q(u) > 0 for u != 0")
def _positivity(case: AuditCase):
    ratios = []
    for _ in range(case.trials):
        u = case.random_function()
        ratios.append(gagliardo_sq(case.base, u) / u.mass())
    return min(ratios), {"min_rayleigh": min(ratios)}


@check("polya-szego", "abs-energy", "Q(|u|) <= Q(u)")
def _polya_szego(case: AuditCase):
    slacks = [polya_szego_abs_check(case.base, case.random_function())["slack"] for _ in range(case.trials)]
    return min(slacks), {}


# =========================
# SPECTRAL
# =========================
@check("spectral-structure", "eigen-residuals", "residuals, orthonormality and a sign-constant first eigenfunction")
def _spectral(case: AuditCase):
    worst = 0.0
    for _ in range(case.trials):
        op = restrict(case.base, case.random_mask())
        spectrum = eigenpairs(op, min(K_MAX, op.size))
        gram = np.array([[a.inner(b) for b in spectrum.eigenfunctions] for a in spectrum.eigenfunctions])
        orth = float(np.abs(gram - np.eye(spectrum.k)).max())
        first = spectrum.eigenfunctions[0].values[op.active_index]
        sign = float(max(0.0, -first.min()))
        worst = max(worst, float(spectrum.residuals.max()), orth, sign)
    return 1e-8 - worst, {"worst_defect": worst}


@check("poincare", "poincare-inequality", "||u|| <= lambda_1^{-1/2} [u] on the mask")
def _poincare(case: AuditCase):
    slacks = []
    for _ in range(case.trials):
        mask = case.random_mask()
        constant = poincare_constant(restrict(case.base, mask))
        u = case.random_function(mask)
        slacks.append(constant * np.sqrt(gagliardo_sq(case.base, u)) - u.norm())
    return min(slacks), {}


@check("monotonicity", "domain-monotonicity", "lambda_k(inner) >= lambda_k(outer) and w_inner <= w_outer")
def _monotonicity(case: AuditCase):
    slack = np.inf
    for _ in range(case.trials):
        inner, outer = case.nested_pair()
        op_in, op_out = restrict(case.base, inner), restrict(case.base, outer)
        lam_in, lam_out = eigenvalues(op_in, K_MAX), eigenvalues(op_out, K_MAX)
        finite = np.isfinite(lam_in)
        if finite.any():
            scale = lam_out[finite]
            slack = min(slack, float(((lam_in[finite] - scale) / scale).min()) + 1e-8)
        gap = solve_torsion(op_out).values.values - solve_torsion(op_in).values.values
        slack = min(slack, float(gap.min()) + 1e-10)
    return slack, {}


@check("max-principle", "torsion-positive", "w >= 0 in the mask and w = 0 outside")
def _max_principle(case: AuditCase):
    slack = np.inf
    for _ in range(case.trials):
        mask = case.random_mask()
        w = solve_torsion(restrict(case.base, mask)).values.values
        outside = float(np.abs(w[~mask.cells]).max()) if (~mask.cells).any() else 0.0
        slack = min(slack, -outside if outside > 0 else float(w[mask.cells].min()))
    return slack, {}


# =========================
# RESOLVENT BOUNDS
# =========================
@check("dunford", "resolvent-eigenvalue-bound", "|1/lambda_k(A) - 1/lambda_k(B)| <= ||R_A - R_B||")
def _dunford(case: AuditCase):
    slack = np.inf
    for _ in range(case.trials):
        inner, outer = case.nested_pair()
        op_in, op_out = restrict(case.base, inner), restrict(case.base, outer)
        gap = np.abs(1.0 / eigenvalues(op_in, K_MAX) - 1.0 / eigenvalues(op_out, K_MAX)).max()
        slack = min(slack, resolvent_norm_diff(op_out, op_in) + 1e-8 - float(gap))
    return slack, {}


@check("empty-set", "empty-set-conventions", "lambda = inf, R = 0, w = 0, cap = 0 on the empty mask")
def _empty_set(case: AuditCase):
    empty = DomainMask.empty(case.grid)
    mask = case.random_mask()
    op = restrict(case.base, mask)
    norm = resolvent_norm_diff(op, None)
    inverse = 1.0 / eigenvalues(op, K_MAX)
    detail = {
        "null_resolvent": resolvent_norm_diff(None, None),
        "empty_functional": eval_functional(FunctionalSpec("lambda1"), case.base, empty),
        "empty_capacity": capacity_estimate(case.base, empty),
        "gamma_to_empty": gamma_distance(case.base, mask, empty),
        "torsion_norm": solve_torsion(op).values.norm(),
    }
    holds = (
        detail["null_resolvent"] == 0.0
        and np.isinf(detail["empty_functional"])
        and detail["empty_capacity"] == 0.0
        and abs(detail["gamma_to_empty"] - detail["torsion_norm"]) <= 1e-12 * detail["torsion_norm"]
    )
    slack = float(min(inverse.min(), norm * (1.0 + 1e-10) - inverse.max()))
    return (slack if holds else -1.0), detail


@check("energy-identity", "torsion-energy", "[w]^2 = integral of w")
def _energy(case: AuditCase):
    gaps = [energy_identity(restrict(case.base, case.random_mask()))["relative_gap"] for _ in range(case.trials)]
    return 1e-8 - max(gaps), {"max_relative_gap": max(gaps)}


@check("projection", "torsion-projection", "Q(w_A - w_B) <= Q(w_A - v) for v supported in B")
def _projection(case: AuditCase):
    slack = np.inf
    for _ in range(case.trials):
        inner, outer = case.nested_pair()
        op_in, op_out = restrict(case.base, inner), restrict(case.base, outer)
        scale = solve_torsion(op_out).integral()
        for _ in range(5):
            competitor = case.random_function(inner) * (0.1 * scale)
            slack = min(slack, projection_gap(op_out, op_in, competitor) + 1e-9 * scale)
    return slack, {}


@check("duality", "resolvent-duality", "int (R_A f - R_B f) = int f (w_A - w_B)")
def _duality(case: AuditCase):
    worst = 0.0
    for _ in range(case.trials):
        inner, outer = case.nested_pair()
        f = case.random_function()
        result = torsion_resolvent_bound_check(restrict(case.base, outer), restrict(case.base, inner), f)
        scale = max(solve_torsion(restrict(case.base, outer)).integral() * f.norm(), 1e-300)
        worst = max(worst, result["duality_residual"] / scale)
    return 1e-8 - worst, {"max_relative_residual": worst}


@check("strong-convergence", "projection-ladder", "Q(w - w_n) decreases along an increasing ladder and equals the mass gap")
def _ladder(case: AuditCase):
    grid = case.grid
    sizes = np.linspace(0.25, 0.75, 4) * grid.n_cells
    masks = [ball_mask(grid, np.zeros(grid.dim), round(n) * grid.cell_volume) for n in sizes]
    rows = strong_convergence_check(case.base, masks)
    energies = np.array([r["energy_distance"] for r in rows])
    gaps = np.array([r["integral_gap"] for r in rows])
    tol = 1e-8 * max(float(gaps.max()), 1e-300)
    rise = float(np.diff(energies).max())
    mismatch = float(np.abs(energies - gaps).max())
    return min(tol - rise, tol - mismatch), {"energy_distance": energies.tolist(), "integral_gap": gaps.tolist()}


@check("capacity", "capacity-bounds", "0 <= cap(inner) <= cap(outer) <= Q(1_outer)")
def _capacity(case: AuditCase):
    slack = np.inf
    for _ in range(max(1, case.trials // 3)):
        inner, outer = case.nested_pair()
        cap_in, cap_out = capacity_estimate(case.base, inner), capacity_estimate(case.base, outer)
        indicator = case.base.quadratic_form(outer.cells.astype(np.float64))
        tol = 1e-6 * cap_out
        slack = min(slack, cap_in, cap_out - cap_in + tol, indicator - cap_out + tol)
    return slack, {}


# =========================
# CONCENTRATION / SHAPES
# =========================
@check("split", "split-defect", "[u]^2 - [v]^2 - [w]^2 >= -2 (cut-off defects)")
def _split(case: AuditCase):
    grid = case.grid
    radius = np.linalg.norm(grid.cell_centers, axis=1)
    slack = np.inf
    for _ in range(case.trials):
        width = case.rng.uniform(0.3, 0.6) * grid.half_width
        u = GridFunction(grid, np.clip(1.0 - (radius / width) ** 2, 0.0, None) ** 2)
        R1 = case.rng.uniform(0.1, 0.25) * grid.half_width
        split = dichotomy_split(case.base, u, np.zeros(grid.dim), R1, 2.0 * R1)
        slack = min(slack, split.seminorm_defect + split.tolerance + 1e-12 * gagliardo_sq(case.base, u))
    return slack, {}


@check("lieb", "translation-lemma", "some shift z gives lambda_1(A_z & B) <= 2 (lambda_1(A) + lambda_1(B))")
def _lieb(case: AuditCase):
    slack = np.inf
    for _ in range(case.trials):
        maskA = case.random_mask(0.1, 0.3)
        # one shared cell keeps the zero shift overlapping
        shared = DomainMask.from_indices(case.grid, [int(case.rng.choice(maskA.indices))])
        maskB = case.random_mask(0.1, 0.3).union(shared)
        result = lieb_translation_search(case.base, maskA, maskB)
        slack = min(slack, (result.bound - result.lambda1_intersection) / result.bound)
    return slack, {}


@check("faber-krahn", "ball-minimizes-lambda1", "the centered ball has the least lambda_1 at its volume")
def _faber_krahn(case: AuditCase):
    cells = max(2, case.grid.n_cells // 4)
    result = faber_krahn_check(case.base, cells, trials=case.trials, seed=int(case.rng.integers(2**31)))
    return result["slack"] + 1e-8 * result["ball_lambda1"], result


# =========================
# SUITE
# =========================
def bounds_audit(
    base: StiffnessOperator, trials: int = 10, seed: int = 0, names: list[str] | None = None
) -> AuditReport:
    names = list(CHECKS) if names is None else names
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ParameterError("checks", f"unknown checks: {', '.join(unknown)}")
    results = []
    for name in names:
        entry = CHECKS[name]
        case = AuditCase(base=base, rng=np.random.default_rng([seed, list(CHECKS).index(name)]), trials=trials)
        try:
            slack, detail = entry.run(case)
        except (FracShapeError, np.linalg.LinAlgError) as exc:
            logger.warning("check %s raised %s", name, exc)
            slack, detail = -np.inf, {"error": str(exc)}
        passed = bool(slack >= 0)
        results.append(
            CheckResult(name=name, invariant=entry.invariant, passed=passed, slack=float(slack), trials=trials, detail=detail)
        )
        if passed and 0 < slack < 1e-12:
            logger.warning("check %s passed with slack %.3e", name, slack)
    return AuditReport(passed=all(r.passed for r in results), checks=results)


def run_bounds_audit(ctx) -> dict:
    """Runner for the bounds-audit kind: writes the report, then fails on the first violated invariant."""
    block = ctx.config.audit
    trials = block.trials if block else 10
    names = block.checks if block else None
    report = bounds_audit(ctx.base, trials=trials, seed=ctx.config.seeds[0], names=names)
    ctx.json("audit.json", report)
    ctx.csv("audit.csv", pd.DataFrame([c.model_dump(exclude={"detail"}) for c in report.checks]))
    if not report.passed:
        first = report.failures[0]
        raise InvariantViolation(first.invariant, f"check {first.name} failed with slack {first.slack:.3e}")
    return {"passed": report.passed, "checks": len(report.checks)}
