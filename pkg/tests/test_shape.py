# tests/test_shape.py
import numpy as np
import pytest

from fracshape.core.errors import ParameterError, PreconditionError, StructuralError
from fracshape.grid.lattice import DomainMask, build_grid
from fracshape.grid.stiffness import assemble_stiffness, restrict
from fracshape.shape.annealing import AnnealingSchedule, minimize_shape, propose_exchange
from fracshape.shape.diagnostics import (
    detect_dichotomy,
    faber_krahn_check,
    gamma_distance,
    repair_volume,
    volume_semicontinuity_check,
    weak_gamma_limit,
)
from fracshape.shape.functionals import FunctionalSpec, eval_functional
from fracshape.shape.masks import (
    ball_mask,
    boundary_cells,
    cell_count,
    components,
    exterior_neighbours,
    is_contiguous,
)
from fracshape.shape.trajectory import ShapeTrajectory, torsion_of
from fracshape.shape.two_ball import COLUMNS, two_ball_experiment
from fracshape.solvers.linear import empty_torsion
from fracshape.solvers.spectrum import eigenvalues


@pytest.fixture(scope="module")
def line512():
    # h = 1/8 on [-32, 32]
    return assemble_stiffness(build_grid(1, 32.0, 512), 0.5)


def interval(base, lo, hi):
    return DomainMask.from_indices(base.grid, range(lo, hi))


# =========================
# FUNCTIONALS
# =========================
@pytest.mark.parametrize(
    "expression, k",
    [("lambda1", 1), ("lambda1 + lambda2", 2), ("max(lambda1, 2 * lambda3)", 3), ("0.5 * lambda2 + 1", 2)],
)
def test_functional_grammar_accepts(expression, k):
    spec = FunctionalSpec(expression)
    assert spec.k == k
    assert spec.name == expression


@pytest.mark.parametrize(
    "expression",
    ["lambda1 * lambda2", "-lambda1", "-2 * lambda1", "lambda0", "lambda1 - lambda2", "min(lambda1, lambda2)", "import os", "2", "mu1"],
)
def test_functional_grammar_rejects(expression):
    with pytest.raises(ParameterError) as info:
        FunctionalSpec(expression)
    assert info.value.field == "functional"


def test_functional_combine():
    spec = FunctionalSpec("max(lambda1, 2 * lambda2) + 1")
    assert spec.combine([1.0, 3.0]) == 7.0
    assert spec.combine([1.0, np.inf]) == np.inf
    assert FunctionalSpec("lambda1 + 1").floor == 1.0
    with pytest.raises(ParameterError):
        spec.combine([1.0])


def test_functional_on_small_and_empty_masks(base1d):
    spec = FunctionalSpec("lambda3")
    assert eval_functional(spec, base1d, DomainMask.empty(base1d.grid)) == np.inf
    assert eval_functional(spec, base1d, interval(base1d, 10, 12)) == np.inf
    mask = interval(base1d, 8, 24)
    assert eval_functional(spec, base1d, mask) == pytest.approx(eigenvalues(restrict(base1d, mask), 3)[2])


def test_functional_is_nearly_translation_invariant(line512):
    spec = FunctionalSpec("lambda1 + lambda2")
    mask = interval(line512, 248, 264)
    reference = eval_functional(spec, line512, mask)
    for shift in (3, -5):
        assert eval_functional(spec, line512, mask.translate([shift])) == pytest.approx(reference, rel=1e-5)
    assert eval_functional(spec, line512, mask.reflect(0)) == pytest.approx(reference, rel=1e-10)


# =========================
# MASKS
# =========================
def test_ball_mask_in_one_dimension(grid1d):
    h = grid1d.h
    ball = ball_mask(grid1d, [0.0], 8 * h)
    assert ball.indices.tolist() == list(range(12, 20))
    assert ball.reflect(0) == ball
    # tie between cells 15 and 16 goes to the lower index
    assert ball_mask(grid1d, [0.0], h).indices.tolist() == [15]


def test_ball_mask_in_two_dimensions(grid2d):
    ball = ball_mask(grid2d, [0.0, 0.0], 32 * grid2d.cell_volume)
    assert ball.count == 32
    assert ball.reflect(0) == ball
    assert ball.reflect(1) == ball
    assert is_contiguous(ball)


def test_cell_count_rejects_volumes(grid1d):
    assert cell_count(grid1d, 0.5) == 8
    for volume in (3.0, -1.0):
        with pytest.raises(ParameterError) as info:
            cell_count(grid1d, volume)
        assert info.value.field == "volume"


def test_components_are_sorted_by_size(grid1d):
    parts = components(DomainMask.from_indices(grid1d, [0, 1, 2, 5, 6, 10]))
    assert [p.indices.tolist() for p in parts] == [[0, 1, 2], [5, 6], [10]]
    ties = components(DomainMask.from_indices(grid1d, [20, 4]))
    assert [p.indices.tolist() for p in ties] == [[4], [20]]
    assert components(DomainMask.empty(grid1d)) == []


def test_boundary_and_exterior_cells(grid1d, grid2d):
    middle = DomainMask.from_indices(grid1d, range(3, 9))
    assert boundary_cells(middle).tolist() == [3, 8]
    assert exterior_neighbours(middle).tolist() == [2, 9]
    edge = DomainMask.from_indices(grid1d, range(0, 5))
    assert boundary_cells(edge).tolist() == [0, 4]
    assert exterior_neighbours(edge).tolist() == [5]
    single = DomainMask.from_indices(grid2d, [9])
    assert exterior_neighbours(single).tolist() == [1, 8, 10, 17]


# =========================
# ANNEALING
# =========================
def test_annealing_preserves_volume_and_records(line128):
    spec = FunctionalSpec("lambda1")
    c = 16 * line128.grid.h
    traj = minimize_shape(spec, line128, c, iterations=400, seed=4, schedule=AnnealingSchedule(record_every=50))
    assert traj.iterations == list(range(0, 401, 50))
    assert all(m.count == 16 for m in traj.masks)
    assert traj.best_mask.count == 16
    assert all(b <= a for a, b in zip(traj.best_values, traj.best_values[1:]))
    assert traj.best_value <= min(traj.values)
    assert len(traj.torsions) == min(len(traj), 16)


def test_annealing_is_deterministic_per_seed(line128):
    spec = FunctionalSpec("lambda1")
    c = 16 * line128.grid.h
    first = minimize_shape(spec, line128, c, iterations=200, seed=9)
    second = minimize_shape(spec, line128, c, iterations=200, seed=9)
    assert first.values == second.values
    assert first.move_log == second.move_log
    assert first.best_mask == second.best_mask


def test_annealing_rejects_parameters(line128):
    spec = FunctionalSpec("lambda1")
    h = line128.grid.h
    for c in (16.5 * h, h, 128 * h):
        with pytest.raises(ParameterError) as info:
            minimize_shape(spec, line128, c, iterations=10)
        assert info.value.field == "c"
    with pytest.raises(ParameterError) as info:
        minimize_shape(spec, line128, 16 * h, iterations=-1)
    assert info.value.field == "iterations"
    with pytest.raises(ParameterError) as info:
        minimize_shape(spec, line128, 16 * h, iterations=10, initial=interval(line128, 0, 10))
    assert info.value.field == "initial"


@pytest.mark.parametrize(
    "kwargs",
    [{"decay": 0.0}, {"decay": 1.5}, {"record_every": 0}, {"tail_length": 0}, {"jump_probability": 2.0}, {"temperature_floor": -0.1}],
)
def test_schedule_validation(kwargs):
    with pytest.raises(ParameterError):
        AnnealingSchedule(**kwargs)


def test_exchange_proposals(line128):
    mask = interval(line128, 40, 64)
    rng = np.random.default_rng(3)
    local = [propose_exchange(mask, rng, 0.0) for _ in range(200)]
    assert {r for r, _ in local} <= {40, 63}
    assert {a for _, a in local} <= {39, 64}
    spread = [propose_exchange(mask, rng, 1.0) for _ in range(200)]
    assert {r for r, _ in spread} - {40, 63}
    assert {a for _, a in spread} - {39, 64}
    assert all(mask.cells[r] and not mask.cells[a] for r, a in local + spread)


def test_temperature_floor_keeps_late_moves_alive(line128):
    spec = FunctionalSpec("lambda1")
    c = 16 * line128.grid.h
    frozen = minimize_shape(spec, line128, c, 1500, seed=2, schedule=AnnealingSchedule(decay=0.9, temperature_floor=0.0))
    floored = minimize_shape(spec, line128, c, 1500, seed=2, schedule=AnnealingSchedule(decay=0.9, temperature_floor=0.5))
    late = [m for m in floored.move_log if m["iteration"] > 500 and m["delta"] > 0]
    assert late
    assert all(m["delta"] <= 0 for m in frozen.move_log if m["iteration"] > 500)


def test_second_eigenvalue_walk_splits_the_default_ball(line128):
    spec = FunctionalSpec("lambda2")
    c = 24 * line128.grid.h
    traj = minimize_shape(spec, line128, c, iterations=4000, seed=0)
    assert is_contiguous(traj.masks[0])
    assert len(components(traj.best_mask)) == 2
    assert traj.best_value < traj.values[0]


def test_first_eigenvalue_minimizer_is_an_interval(line128):
    spec = FunctionalSpec("lambda1")
    c = 16 * line128.grid.h
    traj = minimize_shape(spec, line128, c, iterations=4000, seed=0, initial=interval(line128, 8, 24))
    best_interval = min(
        eval_functional(spec, line128, interval(line128, lo, lo + 16)) for lo in range(0, 128 - 16 + 1)
    )
    assert is_contiguous(traj.best_mask)
    assert traj.best_value == pytest.approx(best_interval, rel=0.01)
    assert detect_dichotomy(traj, line128).verdict == "compactness"


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_second_eigenvalue_minimizer_ends_in_two_pieces(line128, seed):
    spec = FunctionalSpec("lambda2")
    c = 24 * line128.grid.h
    traj = minimize_shape(spec, line128, c, iterations=10000, seed=seed)
    assert len(components(traj.masks[0])) == 1
    parts = components(traj.best_mask)
    assert len(parts) == 2
    assert all(abs(p.count - 12) <= 2 for p in parts)


# =========================
# DIAGNOSTICS
# =========================
def separating_masks(base, steps=9):
    masks = []
    for n in range(steps):
        lo = 48 - 3 * n
        # mirror pair of 8-cell intervals pulled apart by 6 cells per step
        masks.append(DomainMask.from_indices(base.grid, [*range(lo, lo + 8), *range(120 - lo, 128 - lo)]))
    return masks


def test_detector_sees_a_split(line128):
    traj = ShapeTrajectory.from_masks(line128, separating_masks(line128))
    report = detect_dichotomy(traj, line128, spec=FunctionalSpec("lambda2"))
    assert report.verdict == "dichotomy"
    assert len(report.components) == 3
    assert all(len(parts) == 2 and [len(p) for p in parts] == [8, 8] for parts in report.components)
    assert all(b > a for a, b in zip(report.separations, report.separations[1:]))
    assert all(gap == 0.0 for gap in report.resolvent_gap)
    for step in report.steps:
        assert step.repaired_value == pytest.approx(step.value)


def test_detector_sees_compactness(line128):
    still = ShapeTrajectory.from_masks(line128, [interval(line128, 56, 72)] * 6)
    report = detect_dichotomy(still, line128)
    assert report.verdict == "compactness"
    assert report.torsion_spread == 0.0
    sliding = ShapeTrajectory.from_masks(line128, [interval(line128, 40 + n, 56 + n) for n in range(6)])
    assert detect_dichotomy(sliding, line128).verdict == "compactness"


def test_detector_tolerance_overrides(line128):
    traj = ShapeTrajectory.from_masks(line128, separating_masks(line128))
    report = detect_dichotomy(traj, line128, tolerances={"volume_floor_fraction": 0.9})
    assert report.verdict != "dichotomy"
    with pytest.raises(ParameterError):
        detect_dichotomy(traj, line128, tolerances={"floor": 0.1})


def test_volume_semicontinuity(line128):
    mask = interval(line128, 56, 72)
    result = volume_semicontinuity_check(ShapeTrajectory.from_masks(line128, [mask] * 6), tolerance=1e-6)
    assert result["holds"]
    assert result["limit_volume"] == pytest.approx(mask.volume)
    assert result["spread"] == 0.0


def test_volume_semicontinuity_needs_a_converged_tail(line128):
    scattered = [interval(line128, lo, lo + 8) for lo in (0, 40, 80, 110)]
    with pytest.raises(PreconditionError):
        volume_semicontinuity_check(ShapeTrajectory.from_masks(line128, scattered), tolerance=1e-6)
    with pytest.raises(PreconditionError):
        volume_semicontinuity_check(ShapeTrajectory.from_masks(line128, scattered[:1]))


def test_faber_krahn_in_one_dimension(base1d):
    result = faber_krahn_check(base1d, 8, trials=10, seed=2)
    assert result["holds"]
    assert result["slack"] >= 0.0
    for cells in (0, base1d.grid.n_cells):
        with pytest.raises(ParameterError):
            faber_krahn_check(base1d, cells)


def test_gamma_distance(base1d, base2d):
    mask = interval(base1d, 8, 24)
    empty = DomainMask.empty(base1d.grid)
    assert gamma_distance(base1d, mask, empty) == pytest.approx(torsion_of(base1d, mask).values.norm(), rel=1e-14)
    assert gamma_distance(base1d, mask, mask) == 0.0
    other = interval(base1d, 4, 20)
    assert gamma_distance(base1d, mask, other) == pytest.approx(gamma_distance(base1d, other, mask), rel=1e-14)
    with pytest.raises(StructuralError):
        gamma_distance(base1d, mask, DomainMask.empty(base2d.grid))


def test_weak_gamma_limit(base1d):
    mask = interval(base1d, 8, 24)
    assert weak_gamma_limit([torsion_of(base1d, mask)]) == mask
    assert weak_gamma_limit([empty_torsion(DomainMask.empty(base1d.grid))]).is_empty


def test_repair_volume_grows_the_mask(base1d):
    spec = FunctionalSpec("lambda1")
    mask = interval(base1d, 12, 18)
    repaired = repair_volume(spec, base1d, mask, 8)
    assert repaired.count == 8
    assert mask.issubset(repaired)
    assert eval_functional(spec, base1d, repaired) < eval_functional(spec, base1d, mask)
    with pytest.raises(ParameterError):
        repair_volume(spec, base1d, mask, 4)


# =========================
# TWO BALLS
# =========================
def test_two_ball_gap_decays(line512):
    grid = line512.grid
    distances = [n * grid.h for n in (8, 16, 32, 64, 128)]
    frame = two_ball_experiment(grid, 0.5, 64 * grid.h, distances, base=line512)
    assert list(frame.columns) == COLUMNS
    assert len(frame) == len(distances)
    gap = frame["gap"].to_numpy()
    assert np.all(gap > 0.0)
    assert np.all(np.diff(gap) < 0.0)
    assert gap[-1] <= 0.1 * gap[0]
    np.testing.assert_allclose(frame["gap"], frame["lambda2_union"] - frame["lambda1_half_ball"])


def test_two_ball_rejects_bad_distances(line512):
    grid = line512.grid
    for d in (-1.0, 60.0):
        with pytest.raises(ParameterError) as info:
            two_ball_experiment(grid, 0.5, 64 * grid.h, [d], base=line512)
        assert info.value.field == "distances"


def test_two_ball_overlap_reports_the_smallest_separation(line512):
    grid = line512.grid
    # 32 cells per ball, r_half = 2; the snapped ball ends exactly at its radius
    with pytest.raises(ParameterError) as info:
        two_ball_experiment(grid, 0.5, 64 * grid.h, [-1.0], base=line512)
    assert "minimum feasible d is 0 " in info.value.message
    assert "r_half = 2," in info.value.message
    frame = two_ball_experiment(grid, 0.5, 64 * grid.h, [0.0], base=line512)
    assert frame["gap"].iloc[0] > 0.0
