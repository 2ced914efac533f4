# fracshape/grid/kernel.py
"""
Quadratures behind the singular kernel |x - y|^{-(N + 2s)}:
the normalization constant C_{s,N}, the self-cell and cell-pair integrals
used by the corrected kernel rule, and the exterior tail weight of every cell.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from fracshape.core.config import settings
from fracshape.core.errors import NumericError, ParameterError
from fracshape.core.logger import get_logger
from fracshape.grid.lattice import Grid

logger = get_logger(__name__)

# exterior shell radius is PADDING * sqrt(N) * half_width
PADDING = 4.0
_GAUSS_NODES = 48
# 2D pair moments are integrated exactly up to this offset, expanded beyond it
NEAR_OFFSET = 4
_EXACT_1D = 64


def _check_s(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise ParameterError("s", f"must lie in (0, 1), got {s}")


def _check_dim(dim: int) -> None:
    if dim not in (1, 2):
        raise ParameterError("dim", f"must be 1 or 2, got {dim}")


def _quad(fn, a, b) -> tuple[float, float]:
    value, err = integrate.quad(fn, a, b, limit=400, epsabs=0.0, epsrel=1e-12)
    return value, err


def _one_dim_integral(s: float, taylor_err: float) -> tuple[float, float]:
    """Integral of (1 - cos z) / |z|^{1+2s} over the real line, with its error estimate."""
    # below r0 the integrand is replaced by z^2/2; summed over both half-lines the error is r0^{4-2s} / (12 (4-2s))
    r0 = (12.0 * (4.0 - 2.0 * s) * taylor_err) ** (1.0 / (4.0 - 2.0 * s))
    near = r0 ** (2.0 - 2.0 * s) / (2.0 * (2.0 - 2.0 * s))
    # z = e^v on [r0, 1]; 1 - cos z written as 2 sin^2(z/2) to keep digits near the origin
    middle, err_mid = _quad(lambda v: 2.0 * np.sin(0.5 * np.exp(v)) ** 2 * np.exp(-2.0 * s * v), np.log(r0), 0.0)
    # far field: the power part is exact; two integrations by parts leave cos z / z^{a+2} for QAWF
    a = 1.0 + 2.0 * s
    rest, err_rest = integrate.quad(
        lambda z: z ** (-a - 2.0), 1.0, np.inf, weight="cos", wvar=1.0, limlst=400, epsabs=1e-13
    )
    oscill = -np.sin(1.0) + a * np.cos(1.0) - a * (a + 1.0) * rest
    half = near + middle + 1.0 / (2.0 * s) - oscill
    return 2.0 * half, 2.0 * (err_mid + a * (a + 1.0) * abs(err_rest)) + taylor_err


def _transversal_integral(s: float) -> tuple[float, float]:
    """B(s) = integral of (1 + t^2)^{-1-s} over the line, as 2 * integral of cos^{2s} over [0, pi/2]."""

    def smooth(theta: float) -> float:
        u = 0.5 * np.pi - theta
        return (np.sin(u) / u) ** (2.0 * s) if u > 0.0 else 1.0

    # cos^{2s}(theta) = (pi/2 - theta)^{2s} * smooth(theta); the algebraic factor goes into the weight
    value, err = integrate.quad(smooth, 0.0, 0.5 * np.pi, weight="alg", wvar=(0.0, 2.0 * s), epsabs=0.0, epsrel=1e-12)
    return 2.0 * value, 2.0 * err


@lru_cache(maxsize=64)
def normalization_constant(s: float, dim: int, rtol: float | None = None) -> float:
    """
    C_{s,N} = ( integral over R^N of (1 - cos z_1) / |z|^{N+2s} )^{-1}.

    In 2D the transversal variable is integrated out by the substitution
    z_2 = |z_1| t, which leaves the 1D integral times B(s) = integral of (1 + t^2)^{-1-s}.
    """
    _check_s(s)
    _check_dim(dim)
    rtol = settings.tol("quad_rtol") if rtol is None else rtol
    integral, err = _one_dim_integral(s, settings.tol("taylor_err"))
    if dim == 2:
        transversal, err_t = _transversal_integral(s)
        err = err * transversal + err_t * integral
        integral = integral * transversal
    achieved = err / integral
    logger.debug("C_{s=%s,N=%s}: integral %.15g, relative error %.2e", s, dim, integral, achieved)
    if achieved > rtol:
        raise NumericError(f"quadrature for C_(s={s},N={dim}) did not reach {rtol:.1e}", achieved)
    return 1.0 / integral


@dataclass(frozen=True)
class FracParams:
    s: float
    dim: int
    c_norm: float

    @classmethod
    def create(cls, s: float, dim: int) -> "FracParams":
        return cls(s=float(s), dim=int(dim), c_norm=normalization_constant(float(s), int(dim)))


@lru_cache(maxsize=64)
def self_cell_integral(s: float, dim: int) -> float:
    """T_N: double integral of |x - y|^{2-N-2s} over the unit cell squared."""
    _check_s(s)
    if dim == 1:
        return 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))

    a, b, c = 2.0 - 2.0 * s, 3.0 - 2.0 * s, 4.0 - 2.0 * s

    def radial(theta: float) -> float:
        cs, sn = np.cos(theta), np.sin(theta)
        rho = 1.0 / cs
        return rho**a / a - (cs + sn) * rho**b / b + cs * sn * rho**c / c

    # |z|^{-2s} (1 - z1)(1 - z2) on [0,1]^2, folded over the diagonal, times 4 quadrants
    value, _ = integrate.quad(radial, 0.0, np.pi / 4.0, epsabs=0.0, epsrel=1e-13)
    return 8.0 * value


@lru_cache(maxsize=64)
def _near_pair_table(s: float) -> dict[tuple[int, int], float]:
    """2D pair moments for offsets with max |m_i| <= NEAR_OFFSET, keyed by (max, min) of |m|."""
    table = {(0, 0): self_cell_integral(s, 2)}
    for a in range(1, NEAR_OFFSET + 1):
        for b in range(a + 1):
            total = 0.0
            # the tent weight is bilinear on each quadrant, and |m + t| only vanishes at a quadrant corner
            for lo1, hi1 in ((-1.0, 0.0), (0.0, 1.0)):
                for lo2, hi2 in ((-1.0, 0.0), (0.0, 1.0)):
                    value, _ = integrate.dblquad(
                        lambda t2, t1: (1.0 - abs(t1)) * (1.0 - abs(t2)) * ((a + t1) ** 2 + (b + t2) ** 2) ** (-s),
                        lo1,
                        hi1,
                        lo2,
                        hi2,
                        epsabs=0.0,
                        epsrel=1e-9,
                    )
                    total += value
            table[(a, b)] = total
    logger.debug("near pair table for s=%s: %s offsets", s, len(table))
    return table


def cell_pair_integral(s: float, dim: int, offsets: np.ndarray) -> np.ndarray:
    """
    J(m) = integral over a unit cell C and its lattice translate C + m of |x - y|^{2-N-2s}.

    This is the energy of a linear field between the two cells, averaged over
    directions; J(0) is the self-cell integral T_N.
    """
    _check_s(s)
    _check_dim(dim)
    offsets = np.abs(np.asarray(offsets))
    if dim == 1:
        q = 1.0 - 2.0 * s
        m = offsets[..., 0].astype(np.float64)
        out = np.empty_like(m)
        close = m <= _EXACT_1D

        def antiderivative(x):
            return x ** (q + 2.0) / ((q + 1.0) * (q + 2.0))

        mc = m[close]
        out[close] = antiderivative(mc + 1.0) - 2.0 * antiderivative(mc) + antiderivative(np.abs(mc - 1.0))
        # moments of the triangular difference a - b: 1/6 and 1/15
        mf = m[~close]
        out[~close] = mf**q * (1.0 + q * (q - 1.0) / (12.0 * mf**2) + q * (q - 1.0) * (q - 2.0) * (q - 3.0) / (360.0 * mf**4))
        return out

    hi, lo = offsets.max(axis=-1), offsets.min(axis=-1)
    r2 = (offsets * offsets).sum(axis=-1).astype(np.float64)
    with np.errstate(divide="ignore"):
        out = r2 ** (-s) * (1.0 + s * s / (3.0 * r2))
    for (a, b), value in _near_pair_table(s).items():
        out[(hi == a) & (lo == b)] = value
    return out


def _boundary_distance(points: np.ndarray, theta: np.ndarray, half_width: float) -> np.ndarray:
    """Distance from each point to the box boundary along direction theta (broadcast)."""
    cs, sn = np.cos(theta), np.sin(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(cs > 0, (half_width - points[..., 0]) / cs, (half_width + points[..., 0]) / -cs)
        ty = np.where(sn > 0, (half_width - points[..., 1]) / sn, (half_width + points[..., 1]) / -sn)
    tx = np.where(np.abs(cs) < 1e-15, np.inf, tx)
    ty = np.where(np.abs(sn) < 1e-15, np.inf, ty)
    return np.minimum(tx, ty)


def exterior_tail(grid: Grid, s: float) -> np.ndarray:
    """
    rho_i = h^N * integral over R^N minus the box of |x_i - y|^{-(N+2s)} dy.

    Split into the padded shell B(x_i, R_out) minus the box, integrated exactly in the
    radius and by Gauss-Legendre in the angle, plus the analytic remainder beyond R_out.
    """
    _check_s(s)
    L = grid.half_width
    r_out = PADDING * np.sqrt(grid.dim) * L
    two_s = 2.0 * s
    sphere = 2.0 if grid.dim == 1 else 2.0 * np.pi
    remainder = sphere * r_out ** (-two_s) / two_s

    if grid.dim == 1:
        x = grid.cell_centers[:, 0]
        rays = np.stack([L - x, L + x])
        shell = ((rays ** (-two_s)) - r_out ** (-two_s)).sum(axis=0) / two_s
        return grid.cell_volume * (shell + remainder)

    points = grid.cell_centers
    corners = np.array([[L, L], [-L, L], [-L, -L], [L, -L]])
    angles = np.arctan2(corners[None, :, 1] - points[:, None, 1], corners[None, :, 0] - points[:, None, 0])
    angles = np.sort(np.mod(angles, 2.0 * np.pi), axis=1)
    # sector edges: the four corner directions, closed by wrapping the first one
    edges = np.concatenate([angles, angles[:, :1] + 2.0 * np.pi], axis=1)
    nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_NODES)
    shell = np.zeros(grid.n_cells)
    for k in range(4):
        lo, hi = edges[:, k : k + 1], edges[:, k + 1 : k + 2]
        theta = 0.5 * (hi - lo) * nodes[None, :] + 0.5 * (hi + lo)
        r_b = _boundary_distance(points[:, None, :], theta, L)
        integrand = (r_b ** (-two_s) - r_out ** (-two_s)) / two_s
        shell += 0.5 * (hi[:, 0] - lo[:, 0]) * (integrand @ weights)
    return grid.cell_volume * (shell + remainder)
