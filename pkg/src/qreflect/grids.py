"""Uniform grids, wave functions, Fourier transforms and the Wigner map.

The position <-> momentum transform pair is unitary under the symmetric
(2 pi hbar)^(-1/2) convention, discretized so that Parseval holds exactly:
sum |psi(x)|^2 dx == sum |psi(p)|^2 dp to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import PhysicalParams


class GridTooNarrowError(ValueError):
    """Raised when a constructed state does not fit on the supplied grid."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1-D grid with n_points a power of two (endpoint excluded)."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        n = self.n_points
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("n_points must be a power of two >= 2")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    def momentum_axis(self, hbar: float = 1.0) -> np.ndarray:
        """Ascending FFT-conjugate momentum axis (spacing 2 pi hbar / span)."""
        return np.fft.fftshift(2.0 * math.pi * hbar * np.fft.fftfreq(self.n_points, self.dx))

    def cfl_time(self, m: float = 1.0, hbar: float = 1.0) -> float:
        """Shortest grid-resolved dynamical time, 2 pi m dx^2 / hbar."""
        return 2.0 * math.pi * m * self.dx**2 / hbar


def default_grid(params: PhysicalParams, run_time: float = 0.0, n_points: int = 4096) -> SpatialGrid:
    """Grid wide enough for a packet of width sigma plus the ballistic run."""
    half = 6.0 * params.sigma + 10.0 * params.p_bar * run_time / params.m
    half = max(half, 8.0 * params.sigma)
    return SpatialGrid(-half, half, n_points)


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitude on a uniform grid, position or momentum representation.

    In momentum representation the grid axis is the ascending momentum axis and
    ``conjugate_grid`` remembers the originating position grid so the transform
    pair round-trips exactly.
    """

    grid: SpatialGrid
    values: np.ndarray
    representation: str = "position"
    hbar: float = 1.0
    conjugate_grid: SpatialGrid | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.representation not in ("position", "momentum"):
            raise ValueError("representation must be 'position' or 'momentum'")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ValueError("values must match the grid size")
        object.__setattr__(self, "values", v)

    # -- norms and moments ----------------------------------------------------

    @property
    def dx(self) -> float:
        return self.grid.dx

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm_squared(self) -> float:
        return float(np.sum(self.density()) * self.dx)

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def normalized(self) -> "WaveFunction":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return WaveFunction(self.grid, self.values / n, self.representation,
                            self.hbar, self.conjugate_grid)

    def mean_x(self) -> float:
        rho = self.density()
        return float(np.sum(self.grid.x * rho) * self.dx / np.sum(rho * self.dx))

    def var_x(self) -> float:
        rho = self.density()
        w = rho * self.dx / np.sum(rho * self.dx)
        mu = float(np.sum(self.grid.x * w))
        return float(np.sum((self.grid.x - mu) ** 2 * w))

    def moments(self) -> tuple[float, float, float, float, float]:
        """(mean_x, mean_p, var_x, var_p, cov_xp) by grid quadrature.

        Position representation only; momentum moments via the spectral
        derivative, covariance from the symmetrized product.
        """
        if self.representation != "position":
            raise ValueError("moments() expects the position representation")
        x = self.grid.x
        rho = self.density()
        norm = np.sum(rho) * self.dx
        mean_x = float(np.sum(x * rho) * self.dx / norm)
        var_x = float(np.sum((x - mean_x) ** 2 * rho) * self.dx / norm)
        # p applied spectrally: p psi = -i hbar d/dx psi
        k = 2.0 * math.pi * np.fft.fftfreq(self.grid.n_points, self.dx)
        p_psi = -1j * self.hbar * np.fft.ifft(1j * k * np.fft.fft(self.values))
        mean_p = float(np.real(np.sum(np.conj(self.values) * p_psi)) * self.dx / norm)
        p2 = float(np.sum(np.abs(p_psi) ** 2) * self.dx / norm)
        var_p = p2 - mean_p**2
        # Re<(x-<x>)(p-<p>)> is the symmetrized covariance for pure states
        cov_xp = float(
            np.real(np.sum(np.conj(self.values) * (x - mean_x) * p_psi)) * self.dx / norm
        )
        return mean_x, mean_p, var_x, var_p, cov_xp


def to_momentum(psi: WaveFunction) -> WaveFunction:
    """Unitary transform to the momentum representation (ascending p axis)."""
    if psi.representation != "position":
        raise ValueError("to_momentum expects a position-representation state")
    g = psi.grid
    n, dx, hbar = g.n_points, g.dx, psi.hbar
    p = 2.0 * math.pi * hbar * np.fft.fftfreq(n, dx)
    tilde = dx / math.sqrt(2.0 * math.pi * hbar) * np.exp(-1j * p * g.x_min / hbar) * np.fft.fft(psi.values)
    order = np.argsort(p, kind="stable")
    p_sorted = p[order]
    dp = 2.0 * math.pi * hbar / (n * dx)
    p_grid = SpatialGrid(p_sorted[0], p_sorted[0] + n * dp, n)
    return WaveFunction(p_grid, tilde[order], "momentum", hbar, conjugate_grid=g)


def to_position(psi: WaveFunction) -> WaveFunction:
    """Inverse of to_momentum; requires the remembered position grid."""
    if psi.representation != "momentum":
        raise ValueError("to_position expects a momentum-representation state")
    if psi.conjugate_grid is None:
        raise ValueError("momentum state does not carry its originating position grid")
    g = psi.conjugate_grid
    n, dx, hbar = g.n_points, g.dx, psi.hbar
    p = 2.0 * math.pi * hbar * np.fft.fftfreq(n, dx)
    order = np.argsort(p, kind="stable")
    tilde = np.empty_like(psi.values)
    tilde[order] = psi.values
    vals = np.fft.ifft(tilde * np.exp(1j * p * g.x_min / hbar)) * math.sqrt(2.0 * math.pi * hbar) / dx
    return WaveFunction(g, vals, "position", hbar)


# -- state constructors -------------------------------------------------------


def gaussian_packet(
    params: PhysicalParams,
    grid: SpatialGrid,
    center: float | None = None,
    mean_p: float | None = None,
) -> WaveFunction:
    """Normalized Gaussian packet exp(-(x-c)^2/4 sigma^2 + i p_bar x / hbar).

    Raises GridTooNarrowError when more than 1e-8 of the packet mass falls
    outside the grid or the mean momentum is not resolved by the grid.
    """
    sigma, hbar = params.sigma, params.hbar
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    c = params.x_bar if center is None else center
    pb = params.p_bar if mean_p is None else mean_p
    left = (c - grid.x_min) / (math.sqrt(2.0) * sigma)
    right = (grid.x_max - c) / (math.sqrt(2.0) * sigma)
    outside = 0.5 * (math.erfc(left) + math.erfc(right))
    if outside > 1e-8:
        raise GridTooNarrowError(
            f"packet mass outside grid = {outside:.3e} exceeds 1e-8"
        )
    p_nyquist = math.pi * hbar / grid.dx
    if abs(pb) + 6.0 * hbar / (2.0 * sigma) > p_nyquist:
        raise GridTooNarrowError("grid spacing does not resolve the packet momentum")
    x = grid.x
    psi = (2.0 * math.pi * sigma**2) ** -0.25 * np.exp(
        -((x - c) ** 2) / (4.0 * sigma**2) + 1j * pb * x / hbar
    )
    return WaveFunction(grid, psi, "position", hbar).normalized()


def qsd_steady_packet(
    params: PhysicalParams,
    grid: SpatialGrid,
    center_x: float = 0.0,
    center_p: float = 0.0,
) -> WaveFunction:
    """Localized steady packet of position-coupled state diffusion.

    The complex width (1 - i)/(4 sigma_q^2) fixes Var(x) = sigma_q^2,
    Var(p) = hbar^2 / 2 sigma_q^2 and Cov(x,p) = hbar/2.
    """
    if params.D <= 0:
        raise ValueError("steady packet undefined for D = 0")
    sq2 = params.sigma_q**2
    hbar = params.hbar
    x = grid.x
    psi = (2.0 * math.pi * sq2) ** -0.25 * np.exp(
        -(1.0 - 1j) * (x - center_x) ** 2 / (4.0 * sq2) + 1j * center_p * x / hbar
    )
    return WaveFunction(grid, psi, "position", hbar).normalized()


def gaussian_state_from_moments(
    grid: SpatialGrid,
    mean_x: float,
    mean_p: float,
    var_x: float,
    cov_xp: float,
    hbar: float = 1.0,
) -> WaveFunction:
    """Pure Gaussian with prescribed first moments, Var(x) and Cov(x,p).

    Var(p) follows from purity: Var(p) = (hbar^2/4 + Cov^2) / Var(x).
    """
    if not var_x > 0:
        raise ValueError("var_x must be positive")
    alpha = 1.0 / (4.0 * var_x) - 1j * cov_xp / (2.0 * hbar * var_x)
    x = grid.x
    psi = np.exp(-alpha * (x - mean_x) ** 2 + 1j * mean_p * x / hbar)
    return WaveFunction(grid, psi, "position", hbar).normalized()


# -- Wigner transform ---------------------------------------------------------


@dataclass(frozen=True)
class PhaseSpaceField:
    """Real field W(p, x) on the outer product of a p-axis and an x-axis."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(p), len(x))

    def integrate(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(np.sum(self.values) * dx * dp)

    def marginal_x(self) -> np.ndarray:
        dp = self.p[1] - self.p[0]
        return np.sum(self.values, axis=0) * dp

    def marginal_p(self) -> np.ndarray:
        dx = self.x[1] - self.x[0]
        return np.sum(self.values, axis=1) * dx


def wigner_transform(psi: WaveFunction) -> PhaseSpaceField:
    """Wigner function W(p,x) = (1/pi hbar) int dy psi*(x+y) psi(x-y) e^{2ipy/hbar}.

    The correlation integral runs on the native grid; the conjugate momentum
    axis has spacing pi hbar / (N dx), half that of the plain FFT axis.
    """
    if psi.representation != "position":
        raise ValueError("wigner_transform expects the position representation")
    g = psi.grid
    if g.n_points > 2048:
        raise ValueError("wigner_transform builds an n^2 correlation matrix; "
                         "use n_points <= 2048")
    n, dx, hbar = g.n_points, g.dx, psi.hbar
    vals = psi.values
    # correlation matrix C[j, i] = psi*(x_i + y_j) psi(x_i - y_j), zero off grid
    idx = np.arange(n)
    shifts = np.arange(-n // 2, n // 2)
    ip = idx[None, :] + shifts[:, None]
    im = idx[None, :] - shifts[:, None]
    valid = (ip >= 0) & (ip < n) & (im >= 0) & (im < n)
    corr = np.zeros((n, n), dtype=complex)
    corr[valid] = np.conj(vals[ip[valid]]) * vals[im[valid]]
    # FFT over the y index: e^{2 i p y / hbar} with y_j = shifts * dx
    p_axis = np.fft.fftshift(math.pi * hbar * np.fft.fftfreq(n, dx))
    phase = np.exp(2j * np.outer(p_axis, shifts * dx) / hbar)
    w = np.real(phase @ corr) * dx / (math.pi * hbar)
    return PhaseSpaceField(x=g.x.copy(), p=p_axis, values=w)
