"""Grid propagation of the time-dependent Schrodinger equation.

Strang-split spectral stepping (half kinetic, potential, half kinetic) on the
FFT grid, with optional cosine-ramp absorbing layers at the grid edges.  Real
barriers propagate unitarily to roundoff; the absorbing half-line barrier
contracts the norm monotonically and the lost mass is booked as absorption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import SpatialGrid, WaveFunction, to_momentum
from .params import PhysicalParams, PotentialSpec
from .potentials import potential_momentum, potential_position


class CFLViolationError(ValueError):
    """Time step too large for the requested accuracy contract."""


class BoundaryLeakageError(RuntimeError):
    """Probability reached the absorbing edges beyond the allowed tolerance."""


class PrematureStartError(ValueError):
    """Initial packet overlaps the barrier region."""


class PrematureMeasurementError(RuntimeError):
    """Reflected and transmitted packets are not yet separated."""


@dataclass(frozen=True)
class ProbabilityLedger:
    """Per-snapshot bookkeeping of where the probability went."""

    norm: float
    reflected: float
    transmitted: float
    absorbed: float
    edge_loss: float


@dataclass(frozen=True)
class SnapshotSeries:
    times: list
    states: list
    probabilities: list
    params: PhysicalParams
    spec: PotentialSpec


def _momentum_split(psi: WaveFunction) -> tuple[float, float]:
    """(reflected, transmitted) mass from the momentum density; p >= 0 counts
    as transmitted."""
    tilde = to_momentum(psi)
    p = tilde.grid.x
    rho = tilde.density() * tilde.grid.dx
    reflected = float(np.sum(rho[p < 0]))
    transmitted = float(np.sum(rho[p >= 0]))
    return reflected, transmitted


def _absorber_profile(grid: SpatialGrid, width_fraction: float, strength: float) -> np.ndarray:
    """Imaginary-potential magnitude: cosine ramp from 0 to `strength` over the
    outer `width_fraction` of the grid on each side."""
    x = grid.x
    span = grid.x_max - grid.x_min
    w = width_fraction * span
    ramp = np.zeros_like(x)
    left = x < grid.x_min + w
    right = x > grid.x_max - w
    ramp[left] = np.sin(0.5 * math.pi * (grid.x_min + w - x[left]) / w) ** 2
    ramp[right] = np.sin(0.5 * math.pi * (x[right] - (grid.x_max - w)) / w) ** 2
    return strength * ramp


def propagate(
    psi0: WaveFunction,
    spec: PotentialSpec,
    params: PhysicalParams,
    dt: float,
    n_steps: int,
    snapshot_times=None,
    absorber: bool = True,
    absorber_width: float = 0.05,
    absorber_strength: float | None = None,
    edge_tolerance: float = 1e-6,
    check_start: bool = True,
) -> SnapshotSeries:
    """Propagate psi0 under the barrier for n_steps of size dt.

    Snapshots are recorded at the requested times (rounded to the nearest
    step) and always at t = 0 and the final time.  Raises CFLViolationError
    when dt exceeds 0.1 * min(t_E, grid CFL time), PrematureStartError when
    the initial packet overlaps the barrier, and BoundaryLeakageError when
    more than edge_tolerance of probability is eaten by the edge absorbers.
    """
    grid = psi0.grid
    hbar, m = params.hbar, params.m
    t_E = hbar / params.energy
    dt_max = 0.1 * min(t_E, grid.cfl_time(m, hbar))
    if dt > dt_max:
        raise CFLViolationError(f"dt = {dt:.3g} exceeds 0.1*min(t_E, cfl) = {dt_max:.3g}")

    x = grid.x
    v = potential_position(spec, x, hbar)
    if check_start and spec.V0 > 0:
        vmax = float(np.max(np.abs(v)))
        inside = np.abs(v) > 1e-6 * vmax
        overlap = float(np.sum(psi0.density()[inside]) * grid.dx)
        if overlap > 1e-8:
            raise PrematureStartError(
                f"initial overlap with the barrier region is {overlap:.3e} (> 1e-8)"
            )

    k = 2.0 * math.pi * np.fft.fftfreq(grid.n_points, grid.dx)
    kinetic_half = np.exp(-1j * (hbar * k) ** 2 / (2.0 * m) * (0.5 * dt) / hbar)
    pot_phase = np.exp(-1j * v * dt / hbar)
    if absorber:
        strength = absorber_strength if absorber_strength is not None else 2.0 * params.energy
        mask = np.exp(-_absorber_profile(grid, absorber_width, strength) * dt / hbar)
    else:
        mask = None

    wanted = sorted(set((snapshot_times or [])))
    snap_steps = sorted({0, n_steps, *(int(round(t / dt)) for t in wanted)})
    snap_steps = [s for s in snap_steps if 0 <= s <= n_steps]

    vals = psi0.values.copy()
    dx = grid.dx
    edge_loss = 0.0
    absorbed_pot = 0.0
    times, states, probs = [], [], []

    def record(step: int):
        psi = WaveFunction(grid, vals.copy(), "position", hbar)
        norm = psi.norm_squared()
        refl, trans = _momentum_split(psi)
        times.append(step * dt)
        states.append(psi)
        probs.append(ProbabilityLedger(
            norm=norm, reflected=refl, transmitted=trans,
            absorbed=absorbed_pot, edge_loss=edge_loss,
        ))

    if 0 in snap_steps:
        record(0)
    for step in range(1, n_steps + 1):
        vals = np.fft.ifft(kinetic_half * np.fft.fft(vals))
        before = float(np.sum(np.abs(vals) ** 2)) * dx
        vals *= pot_phase
        after = float(np.sum(np.abs(vals) ** 2)) * dx
        absorbed_pot += before - after
        if mask is not None:
            vals *= mask
            lost = after - float(np.sum(np.abs(vals) ** 2)) * dx
            edge_loss += lost
        vals = np.fft.ifft(kinetic_half * np.fft.fft(vals))
        if step in snap_steps:
            record(step)

    if absorber and edge_loss > edge_tolerance:
        raise BoundaryLeakageError(
            f"edge absorbers removed {edge_loss:.3e} of probability "
            f"(> {edge_tolerance:.1e}); enlarge the grid or shorten the run"
        )
    return SnapshotSeries(times=times, states=states, probabilities=probs,
                          params=params, spec=spec)


def mean_energy(psi: WaveFunction, spec: PotentialSpec, params: PhysicalParams) -> float:
    """<H> = kinetic (spectral) + potential (real part) expectation."""
    grid = psi.grid
    k = 2.0 * math.pi * np.fft.fftfreq(grid.n_points, grid.dx)
    tilde = np.fft.fft(psi.values)
    kin = float(np.sum((params.hbar * k) ** 2 / (2.0 * params.m) * np.abs(tilde) ** 2))
    kin *= grid.dx / grid.n_points
    v = np.real(potential_position(spec, grid.x, params.hbar))
    pot = float(np.sum(v * psi.density()) * grid.dx)
    return kin + pot


def reflection_probability(
    series: SnapshotSeries,
    boundary: float = 0.0,
    overlap_tolerance: float = 1e-4,
    force: bool = False,
) -> tuple[float, float, float]:
    """(reflected, transmitted, absorbed) from the final snapshot.

    Reflected/transmitted are the negative/nonnegative momentum masses;
    absorbed is the norm deficit (complex barriers).  Raises
    PrematureMeasurementError when more than overlap_tolerance of position
    mass still sits within 4a of the splitting boundary.
    """
    psi = series.states[-1]
    ledger = series.probabilities[-1]
    a = max(series.spec.a, psi.grid.dx)
    near = np.abs(psi.grid.x - boundary) < 4.0 * a
    near_mass = float(np.sum(psi.density()[near]) * psi.grid.dx)
    if near_mass > overlap_tolerance and not force:
        raise PrematureMeasurementError(
            f"{near_mass:.3e} of the density is still within 4a of the boundary"
        )
    absorbed = 1.0 - ledger.norm
    return ledger.reflected, ledger.transmitted, absorbed


@dataclass(frozen=True)
class BornResult:
    """First-order reflected momentum density for a normalized incoming packet."""

    p: np.ndarray
    density: np.ndarray
    total: float


def born_reflection(
    params: PhysicalParams,
    spec: PotentialSpec | None = None,
    n_points: int = 2048,
    p_min: float | None = None,
) -> BornResult:
    """First Born reflected density on the p < 0 half-grid.

    density(p) = (2 pi m^2 / hbar p^2) V(2p)^2 |psi_in(-p)|^2 with V the
    momentum-space barrier and psi_in the incoming Gaussian packet; p = 0 is
    excluded (endpoint-open grid) since the prefactor is singular there.
    """
    if spec is None:
        spec = params.potential
    m, hbar, pb, sigma = params.m, params.hbar, params.p_bar, params.sigma
    if p_min is None:
        p_min = -8.0 * pb
    p = np.linspace(p_min, 0.0, n_points, endpoint=False)
    v = potential_momentum(spec, 2.0 * p, hbar)
    incoming = math.sqrt(2.0 * sigma**2 / (math.pi * hbar**2)) * np.exp(
        -2.0 * sigma**2 * (-p - pb) ** 2 / hbar**2
    )
    density = 2.0 * math.pi * m**2 / (hbar * p**2) * v**2 * incoming
    total = float(np.trapezoid(density, p))
    return BornResult(p=p, density=density, total=total)
