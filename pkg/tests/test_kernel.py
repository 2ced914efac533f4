# tests/test_kernel.py
import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from fracshape.core.errors import ParameterError
from fracshape.grid.kernel import (
    FracParams,
    cell_pair_integral,
    exterior_tail,
    normalization_constant,
    self_cell_integral,
)
from fracshape.grid.lattice import build_grid


def closed_form_constant(s, dim):
    return s * 4.0**s * gamma(dim / 2.0 + s) / (np.pi ** (dim / 2.0) * gamma(1.0 - s))


def test_half_laplacian_constant_in_one_dimension():
    assert normalization_constant(0.5, 1) == pytest.approx(1.0 / np.pi, rel=1e-8)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_constant_matches_gamma_formula(s, dim):
    assert normalization_constant(s, dim) == pytest.approx(closed_form_constant(s, dim), rel=1e-7)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("s", [round(0.05 * k, 2) for k in range(1, 20)])
def test_constant_reaches_its_target_across_s(s, dim):
    # the internal error estimate must stay below quad_rtol on the whole range
    assert normalization_constant(s, dim) == pytest.approx(closed_form_constant(s, dim), rel=1e-8)


@pytest.mark.parametrize("s, dim", [(0.0, 1), (1.0, 1), (1.5, 2), (0.5, 3)])
def test_constant_rejects_parameters(s, dim):
    with pytest.raises(ParameterError):
        normalization_constant(s, dim)


def test_frac_params_carries_constant():
    params = FracParams.create(0.5, 1)
    assert params.c_norm == normalization_constant(0.5, 1)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_self_cell_integral_one_dimension(s):
    # |x - y|^{1-2s} over the unit square, folded onto the difference variable
    expected, _ = integrate.quad(lambda z: 2.0 * (1.0 - z) * z ** (1.0 - 2.0 * s), 0.0, 1.0, epsrel=1e-13)
    assert self_cell_integral(s, 1) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("s", [0.3, 0.6])
def test_self_cell_integral_two_dimensions(s):
    quarter, _ = integrate.dblquad(
        lambda z2, z1: (z1 * z1 + z2 * z2) ** (-s) * (1.0 - z1) * (1.0 - z2),
        0.0,
        1.0,
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=1e-10,
    )
    assert self_cell_integral(s, 2) == pytest.approx(4.0 * quarter, rel=1e-6)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_exterior_tail_one_dimension_is_exact(s):
    grid = build_grid(1, 2.0, 40)
    x = grid.cell_centers[:, 0]
    L = grid.half_width
    expected = grid.h * ((L - x) ** (-2 * s) + (L + x) ** (-2 * s)) / (2 * s)
    np.testing.assert_allclose(exterior_tail(grid, s), expected, rtol=1e-12)


@pytest.mark.parametrize("cell", [0, 27, 36])
def test_exterior_tail_two_dimensions_matches_polar_quadrature(cell):
    s = 0.4
    grid = build_grid(2, 1.0, 8)
    L = grid.half_width
    px, py = grid.cell_centers[cell]

    def boundary(theta):
        cs, sn = np.cos(theta), np.sin(theta)
        tx = (L - px) / cs if cs > 0 else (L + px) / -cs if cs < 0 else np.inf
        ty = (L - py) / sn if sn > 0 else (L + py) / -sn if sn < 0 else np.inf
        return min(tx, ty)

    corners = sorted(np.mod(np.arctan2(cy - py, cx - px), 2 * np.pi) for cx, cy in [(L, L), (-L, L), (-L, -L), (L, -L)])
    value, _ = integrate.quad(lambda t: boundary(t) ** (-2 * s) / (2 * s), 0.0, 2 * np.pi, points=corners, limit=200)
    assert exterior_tail(grid, s)[cell] == pytest.approx(grid.cell_volume * value, rel=1e-9)


def test_exterior_tail_two_dimensions_symmetry():
    grid = build_grid(2, 1.0, 8)
    image = exterior_tail(grid, 0.5).reshape(grid.shape)
    np.testing.assert_allclose(image, image[::-1, :], rtol=1e-10)
    np.testing.assert_allclose(image, image.T, rtol=1e-10)
    # corner cells see the most exterior
    assert image[0, 0] > image[3, 3]


@pytest.mark.parametrize("s", [0.2, 0.5, 0.9])
def test_cell_pair_integral_one_dimension(s):
    offsets = np.array([[0], [1], [3], [63], [64], [65], [300], [-300]])
    values = cell_pair_integral(s, 1, offsets)
    for m, value in zip(np.abs(offsets[:, 0]), values):
        expected, _ = integrate.quad(
            lambda t: (1.0 - abs(t)) * abs(m + t) ** (1.0 - 2.0 * s), -1.0, 1.0, points=[0.0], epsabs=0.0, epsrel=1e-12
        )
        assert value == pytest.approx(expected, rel=1e-10)
    assert values[0] == pytest.approx(self_cell_integral(s, 1), rel=1e-12)


def test_cell_pair_integral_two_dimensions():
    s = 0.4
    values = cell_pair_integral(s, 2, np.array([[0, 0], [1, 0], [0, -1], [2, 1], [-1, -2], [4, 0], [5, 0]]))
    assert values[0] == pytest.approx(self_cell_integral(s, 2), rel=1e-12)
    # the square lattice symmetries leave the moment unchanged
    assert values[1] == values[2]
    assert values[3] == values[4]
    # exact near-field value and far-field expansion meet at the switch-over offset
    expansion = 16.0 ** (-s) * (1.0 + s * s / 48.0)
    assert values[5] == pytest.approx(expansion, rel=1e-2)
    assert values[6] == pytest.approx(25.0 ** (-s) * (1.0 + s * s / 75.0), rel=1e-15)
    assert np.all(np.diff(values[[1, 3, 5, 6]]) < 0.0)
