# tests/test_solvers.py
import numpy as np
import pytest

from fracshape.core.config import settings
from fracshape.core.errors import ParameterError, StructuralError
from fracshape.grid.lattice import DomainMask, GridFunction, build_grid
from fracshape.grid.stiffness import assemble_stiffness, gagliardo_sq, restrict
from fracshape.shape.masks import ball_mask
from fracshape.solvers.bounds import (
    capacity_estimate,
    energy_identity,
    fit_holder_exponent,
    projection_gap,
    resolvent_norm_diff,
    strong_convergence_check,
    torsion_resolvent_bound_check,
)
from fracshape.solvers.linear import apply_resolvent, empty_torsion, solve_torsion
from fracshape.solvers.spectrum import eigenpairs, eigenvalues, poincare_constant


def interval(base, lo, hi):
    return DomainMask.from_indices(base.grid, range(lo, hi))


def random_mask(base, rng, count):
    return DomainMask.from_indices(base.grid, rng.choice(base.grid.n_cells, count, replace=False))


# =========================
# TORSION / RESOLVENT
# =========================
def test_torsion_solves_the_discrete_problem(base2d, rng):
    mask = random_mask(base2d, rng, 30)
    op = restrict(base2d, mask)
    torsion = solve_torsion(op)
    w = torsion.values.values
    np.testing.assert_allclose(op.matrix @ w[mask.cells], base2d.grid.cell_volume, rtol=1e-9)
    assert torsion.residual <= settings.tol("cg_rtol") * 10
    assert np.all(w[~mask.cells] == 0.0)
    assert w[mask.cells].min() > 0.0


def test_torsion_grows_with_the_mask(base1d, rng):
    outer = random_mask(base1d, rng, 20)
    inner = DomainMask.from_indices(base1d.grid, outer.indices[::2])
    w_out = solve_torsion(restrict(base1d, outer)).values.values
    w_in = solve_torsion(restrict(base1d, inner)).values.values
    assert np.all(w_out >= w_in - 1e-12)


def test_resolvent_is_self_adjoint(base2d, rng):
    op = restrict(base2d, random_mask(base2d, rng, 25))
    f = GridFunction(base2d.grid, rng.standard_normal(base2d.grid.n_cells))
    g = GridFunction(base2d.grid, rng.standard_normal(base2d.grid.n_cells))
    assert g.inner(apply_resolvent(op, f)) == pytest.approx(f.inner(apply_resolvent(op, g)), rel=1e-9)


def test_resolvent_of_one_is_the_torsion(base1d):
    op = restrict(base1d, interval(base1d, 4, 28))
    ones = GridFunction(base1d.grid, np.ones(base1d.grid.n_cells))
    np.testing.assert_allclose(apply_resolvent(op, ones).values, solve_torsion(op).values.values, rtol=1e-10, atol=1e-14)


def test_zero_right_hand_side(base1d):
    op = restrict(base1d, interval(base1d, 4, 28))
    assert np.all(apply_resolvent(op, GridFunction.zeros(base1d.grid)).values == 0.0)


def test_empty_torsion_is_null(grid1d):
    torsion = empty_torsion(DomainMask.empty(grid1d))
    assert torsion.integral() == 0.0
    assert torsion.values.norm() == 0.0


def test_resolvent_rejects_other_grid(base1d, grid2d):
    op = restrict(base1d, interval(base1d, 0, 8))
    with pytest.raises(StructuralError):
        apply_resolvent(op, GridFunction.zeros(grid2d))


# =========================
# SPECTRUM
# =========================
def test_eigenpairs_are_orthonormal_and_positive(base2d, rng):
    op = restrict(base2d, random_mask(base2d, rng, 40))
    spectrum = eigenpairs(op, 4)
    assert spectrum.k == 4
    assert np.all(np.diff(spectrum.eigenvalues) >= 0.0)
    assert spectrum.residuals.max() <= settings.tol("eig_rtol")
    gram = np.array([[a.inner(b) for b in spectrum.eigenfunctions] for a in spectrum.eigenfunctions])
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-10)
    first = spectrum.eigenfunctions[0].values
    assert first[op.active_index].min() > 0.0
    assert np.all(first[~op.mask.cells] == 0.0)


def test_eigenvalues_are_rayleigh_quotients(base1d):
    op = restrict(base1d, interval(base1d, 6, 26))
    spectrum = eigenpairs(op, 3)
    for lam, phi in zip(spectrum.eigenvalues, spectrum.eigenfunctions):
        assert gagliardo_sq(base1d, phi) / phi.mass() == pytest.approx(lam, rel=1e-10)


def test_iterative_path_matches_dense(line128, monkeypatch):
    op = restrict(line128, interval(line128, 40, 88))
    dense = eigenpairs(op, 3).eigenvalues
    monkeypatch.setattr(settings, "DENSE_LIMIT", 10)
    iterative = eigenpairs(op, 3).eigenvalues
    np.testing.assert_allclose(iterative, dense, rtol=1e-9)


def test_eigenvalues_pad_with_infinity(base1d):
    values = eigenvalues(restrict(base1d, interval(base1d, 10, 12)), 4)
    assert np.all(np.isfinite(values[:2]))
    assert np.all(np.isinf(values[2:]))


def test_single_cell_eigenvalue(base1d):
    op = restrict(base1d, interval(base1d, 15, 16))
    assert eigenvalues(op, 1)[0] == pytest.approx(base1d.diag[15] / base1d.grid.h, rel=1e-14)


def test_eigenpairs_k_range(base1d):
    op = restrict(base1d, interval(base1d, 10, 14))
    for k in (0, 5):
        with pytest.raises(ParameterError):
            eigenpairs(op, k)
    with pytest.raises(ParameterError):
        eigenvalues(op, 0)


def test_eigenvalues_decrease_with_the_mask(base2d, rng):
    outer = random_mask(base2d, rng, 30)
    inner = DomainMask.from_indices(base2d.grid, outer.indices[:20])
    lam_out = eigenvalues(restrict(base2d, outer), 5)
    lam_in = eigenvalues(restrict(base2d, inner), 5)
    assert np.all(lam_in >= lam_out * (1.0 - 1e-12))


def test_poincare_constant(base1d):
    op = restrict(base1d, interval(base1d, 4, 28))
    assert poincare_constant(op) == pytest.approx(eigenvalues(op, 1)[0] ** -0.5, rel=1e-14)


def test_half_laplacian_on_the_unit_interval():
    grid = build_grid(1, 2.0, 256)
    base = assemble_stiffness(grid, 0.5)
    mask = DomainMask(grid, np.abs(grid.cell_centers[:, 0]) < 1.0)
    assert mask.count == 128
    # Q carries no C_{s,N} factor, so its eigenvalues are those of (-Delta)^s divided by C_{1/2,1} = 1/pi;
    # the first eigenvalue of (-Delta)^{1/2} on (-1, 1) is 1.1577738
    expected = 1.1577738 / base.params.c_norm
    assert expected == pytest.approx(np.pi * 1.1577738, rel=1e-8)
    assert eigenvalues(restrict(base, mask), 1)[0] == pytest.approx(expected, rel=0.05)


# =========================
# RESOLVENT BOUNDS
# =========================
def test_resolvent_distance_to_the_empty_set(base1d):
    op = restrict(base1d, interval(base1d, 4, 28))
    lam1 = eigenvalues(op, 1)[0]
    assert resolvent_norm_diff(op, None) == pytest.approx(1.0 / lam1, rel=1e-10)
    assert resolvent_norm_diff(None, op) == pytest.approx(1.0 / lam1, rel=1e-10)
    assert resolvent_norm_diff(None, None) == 0.0


def test_resolvent_distance_is_symmetric_and_bounds_eigenvalues(base2d, rng):
    outer = random_mask(base2d, rng, 36)
    inner = DomainMask.from_indices(base2d.grid, outer.indices[::3])
    op_out, op_in = restrict(base2d, outer), restrict(base2d, inner)
    norm = resolvent_norm_diff(op_out, op_in)
    assert norm == pytest.approx(resolvent_norm_diff(op_in, op_out), rel=1e-12)
    gaps = np.abs(1.0 / eigenvalues(op_in, 6) - 1.0 / eigenvalues(op_out, 6))
    assert gaps.max() <= norm * (1.0 + 1e-10)


def test_power_iteration_matches_dense(base1d, rng, monkeypatch):
    outer = interval(base1d, 2, 30)
    inner = interval(base1d, 8, 20)
    op_out, op_in = restrict(base1d, outer), restrict(base1d, inner)
    dense = resolvent_norm_diff(op_out, op_in)
    monkeypatch.setattr(settings, "DENSE_LIMIT", 4)
    assert resolvent_norm_diff(op_out, op_in) == pytest.approx(dense, rel=1e-5)


def test_torsion_resolvent_check(base1d, rng):
    outer = interval(base1d, 2, 30)
    inner = interval(base1d, 6, 26)
    f = GridFunction(base1d.grid, rng.standard_normal(base1d.grid.n_cells))
    result = torsion_resolvent_bound_check(restrict(base1d, outer), restrict(base1d, inner), f)
    assert result["lhs"] > 0.0
    assert result["torsion_distance"] > 0.0
    assert result["constant"] == pytest.approx(result["lhs"] / result["torsion_distance"])
    assert result["duality_residual"] <= 1e-9 * f.norm()
    with pytest.raises(StructuralError):
        torsion_resolvent_bound_check(restrict(base1d, inner), restrict(base1d, outer))


def test_holder_fit_recovers_exponent():
    d = np.array([0.01, 0.02, 0.05, 0.1, 0.0])
    fit = fit_holder_exponent(2.0 * d**0.5, d)
    assert fit["alpha"] == pytest.approx(0.5, rel=1e-10)
    assert fit["constant"] == pytest.approx(2.0, rel=1e-10)
    assert fit["points"] == 4
    assert fit_holder_exponent([1.0], [0.5])["alpha"] is None


def test_energy_identity(base2d, rng):
    result = energy_identity(restrict(base2d, random_mask(base2d, rng, 30)))
    assert result["relative_gap"] <= 1e-9


def test_projection_property(base1d, rng):
    outer = interval(base1d, 2, 30)
    inner = interval(base1d, 8, 24)
    op_out, op_in = restrict(base1d, outer), restrict(base1d, inner)
    for _ in range(10):
        competitor = GridFunction(base1d.grid, np.where(inner.cells, rng.standard_normal(base1d.grid.n_cells), 0.0))
        assert projection_gap(op_out, op_in, competitor) >= 0.0
    with pytest.raises(StructuralError):
        projection_gap(op_out, op_in, GridFunction(base1d.grid, np.ones(base1d.grid.n_cells)))


def test_strong_convergence_along_a_ladder(base1d):
    masks = [ball_mask(base1d.grid, [0.0], n * base1d.grid.h) for n in (6, 12, 18, 24)]
    rows = strong_convergence_check(base1d, masks)
    energies = np.array([r["energy_distance"] for r in rows])
    gaps = np.array([r["integral_gap"] for r in rows])
    assert np.all(np.diff(energies) < 0)
    assert energies[-1] == 0.0
    np.testing.assert_allclose(energies, gaps, rtol=1e-8, atol=1e-12 * gaps.max())
    with pytest.raises(StructuralError):
        strong_convergence_check(base1d, masks[::-1])


# =========================
# CAPACITY
# =========================
def test_capacity_of_the_empty_set(base1d):
    assert capacity_estimate(base1d, DomainMask.empty(base1d.grid)) == 0.0


def test_capacity_of_the_whole_box_is_the_tail(base1d):
    assert capacity_estimate(base1d, DomainMask.full(base1d.grid)) == pytest.approx(base1d.tail.sum(), rel=1e-12)


def test_capacity_is_monotone_and_below_the_indicator_energy(base1d):
    inner = interval(base1d, 12, 16)
    outer = interval(base1d, 8, 22)
    cap_in, cap_out = capacity_estimate(base1d, inner), capacity_estimate(base1d, outer)
    assert 0.0 < cap_in <= cap_out * (1.0 + 1e-6)
    assert cap_out <= base1d.quadratic_form(outer.cells.astype(float)) * (1.0 + 1e-12)
    single = interval(base1d, 15, 16)
    assert capacity_estimate(base1d, single) <= base1d.diag[15] * (1.0 + 1e-12)
