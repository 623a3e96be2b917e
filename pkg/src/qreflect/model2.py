"""Two-particle scattering: light particle reflecting off a massive target.

Second-order perturbation theory in the contact barrier V(x - X) with the
incoming light particle in the plane-wave limit and the target in a Gaussian
state.  The environment, when present, couples only to the target position.
Energy-conservation delta functions are kept symbolic (descriptor objects) and
every target-momentum integral is done analytically through the constraint
root and its Jacobian, never by numerical smearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oscquad import QuadratureError, decay_cutoff, integrate_oscillatory, panel_nodes
from .params import PhysicalParams, steady_target_width
from .potentials import potential_momentum


@dataclass(frozen=True)
class Model2Config:
    """Two-particle run configuration.

    With steady_target=True the target width is slaved to the diffusion
    constant, Sigma = (hbar^3 / 8 M D)^(1/4), the width the environment itself
    equilibrates the target to.
    """

    params: PhysicalParams
    tau: float | None = None
    steady_target: bool = False

    def __post_init__(self):
        p = self.params
        if p.M is None:
            raise ValueError("two-particle runs need the target mass M")
        if self.steady_target:
            if p.D <= 0:
                raise ValueError("steady_target requires D > 0")
            object.__setattr__(
                self, "params", p.replace(Sigma=steady_target_width(p.M, p.D, p.hbar))
            )
        elif p.Sigma is None:
            raise ValueError("set Sigma explicitly or use steady_target")
        if self.tau is None:
            object.__setattr__(self, "tau", self.params.tau_default)

    def with_D(self, D: float) -> "Model2Config":
        return Model2Config(self.params.replace(D=D), tau=self.tau,
                            steady_target=self.steady_target)


@dataclass(frozen=True)
class EnergyConstraint:
    """Symbolic delta(E) carried alongside a smooth coefficient.

    E(p, P) is the kinetic-energy mismatch when the light particle ends at p
    and the target at P (total momentum fixes the incoming target momentum to
    P + p - p_bar).  dE/dP = (p - p_bar)/M is P-independent, so integrals over
    P collapse onto the root with Jacobian M/|p - p_bar|.
    """

    p: float
    p_bar: float
    m: float
    M: float

    def residual(self, P: float) -> float:
        pb, m, M = self.p_bar, self.m, self.M
        return (pb**2 - self.p**2) / (2.0 * m) + (
            (P + self.p - pb) ** 2 - P**2
        ) / (2.0 * M)

    @property
    def dE_dP(self) -> float:
        return (self.p - self.p_bar) / self.M

    @property
    def root(self) -> float:
        """The P value satisfying E(p, P) = 0."""
        pb, m, M = self.p_bar, self.m, self.M
        delta = self.p - pb
        return 0.5 * (M * (pb + self.p) / m - delta)

    @property
    def jacobian(self) -> float:
        return self.M / abs(self.p - self.p_bar)


@dataclass(frozen=True)
class ConstrainedDensity:
    """Smooth coefficient multiplying the symbolic delta(E)."""

    coefficient: float
    constraint: EnergyConstraint


def _v_squared(params: PhysicalParams, delta: float) -> float:
    spec = params.potential
    if not spec.has_analytic_transform:
        raise ValueError("two-particle kernels need an analytic barrier transform")
    return float(potential_momentum(spec, delta, params.hbar)) ** 2


def _target(cfg: Model2Config) -> tuple[float, float, float, float, float, float]:
    p = cfg.params
    return p.m, p.M, p.hbar, p.p_bar, p.P_bar, p.Sigma


def joint_reflected_noenv(cfg: Model2Config, p: float, P: float) -> ConstrainedDensity:
    """Joint density coefficient for light momentum p and target momentum P.

    (2 sqrt(pi) Sigma m / hbar^2 p_bar) V^2(p - p_bar)
        * exp(-Sigma^2 (p - p_bar + P - P_bar)^2 / hbar^2), times delta(E).
    """
    m, M, hbar, pb, Pb, Sg = _target(cfg)
    delta = p - pb
    coef = (
        2.0 * math.sqrt(math.pi) * Sg * m / (hbar**2 * pb)
        * _v_squared(cfg.params, delta)
        * math.exp(-(Sg**2) * (delta + P - Pb) ** 2 / hbar**2)
    )
    return ConstrainedDensity(coef, EnergyConstraint(p=p, p_bar=pb, m=m, M=M))


def target_momentum_density(cfg: Model2Config, P: float) -> float:
    """Zeroth-order density of the target momentum,
    Sigma/(sqrt(pi) hbar) exp(-Sigma^2 (P - P_bar)^2 / hbar^2)."""
    _, _, hbar, _, Pb, Sg = _target(cfg)
    return Sg / (math.sqrt(math.pi) * hbar) * math.exp(-(Sg**2) * (P - Pb) ** 2 / hbar**2)


def marginal_reflected_noenv(cfg: Model2Config, p: float, simplified: bool = False) -> float:
    """Reflected density of the light particle with the target traced out.

    The delta(E) is absorbed analytically (Jacobian M/|p - p_bar|), giving

        (2 sqrt(pi) Sigma m M / hbar^2 p_bar |p - p_bar|) V^2(p - p_bar)
            * exp(-Sigma^2 M^2 F(p)^2 / hbar^2 (p - p_bar)^2)

    with F the energy mismatch at the incoming target momentum P_bar.  With
    simplified=True, uses the light-particle limit m << M at P_bar = 0, where
    the exponent becomes Sigma^2 M^2 (p + p_bar)^2 / 4 hbar^2 m^2.
    """
    m, M, hbar, pb, Pb, Sg = _target(cfg)
    if p == pb:
        raise ValueError("marginal density is singular exactly at p = p_bar")
    delta = p - pb
    pref = (
        2.0 * math.sqrt(math.pi) * Sg * m * M / (hbar**2 * pb * abs(delta))
        * _v_squared(cfg.params, delta)
    )
    if simplified:
        return pref * math.exp(-(Sg**2) * M**2 * (p + pb) ** 2 / (4.0 * hbar**2 * m**2))
    F = (pb**2 - p**2) / (2.0 * m) + (Pb**2 - (Pb - delta) ** 2) / (2.0 * M)
    return pref * math.exp(-(Sg**2) * M**2 * F**2 / (hbar**2 * delta**2))


def conditional_reflected_noenv(cfg: Model2Config, p: float, P: float) -> ConstrainedDensity:
    """Density of p conditioned on measuring the target at P (no environment).

    Coefficient (2 pi m / hbar p_bar) V^2(p - p_bar)
        * exp(-Sigma^2 [(p-p_bar+P-P_bar)^2 - (P-P_bar)^2] / hbar^2),
    times the same delta(E); multiplying by target_momentum_density(P)
    reproduces the joint coefficient identically.
    """
    m, M, hbar, pb, Pb, Sg = _target(cfg)
    delta = p - pb
    dP = P - Pb
    coef = (
        2.0 * math.pi * m / (hbar * pb)
        * _v_squared(cfg.params, delta)
        * math.exp(-(Sg**2) * ((delta + dP) ** 2 - dP**2) / hbar**2)
    )
    return ConstrainedDensity(coef, EnergyConstraint(p=p, p_bar=pb, m=m, M=M))


# -- with environment -----------------------------------------------------------


@dataclass(frozen=True)
class JointReflectedResult:
    """Gridded joint/marginal/conditional densities for the unitary case.

    ``coefficient[i, j]`` is the smooth factor of the joint density at
    (p[i], P[j]) with delta(E) symbolic; the marginal has the delta resolved
    analytically.  A conditional slice at conditional_P is included on request.
    """

    p: np.ndarray
    P: np.ndarray
    coefficient: np.ndarray
    marginal: np.ndarray
    total_marginal: float
    conditional_P: float | None = None
    conditional: np.ndarray | None = None


def joint_reflected_map(
    cfg: Model2Config,
    p_grid: np.ndarray | None = None,
    P_grid: np.ndarray | None = None,
    conditional_P: float | None = None,
) -> JointReflectedResult:
    """Assemble the environment-free joint, marginal and conditional densities.

    The marginal is consistent with the joint by construction of the
    constraint resolution: marginal(p) = coefficient(p, P*(p)) * M / |p - p_bar|.
    """
    params = cfg.params
    pb = params.p_bar
    if p_grid is None:
        p_grid = np.linspace(-3.0 * pb, 0.0, 301, endpoint=False)
    if P_grid is None:
        Sg = params.Sigma
        P_grid = np.linspace(params.P_bar - 5.0 * params.hbar / Sg,
                             params.P_bar + 5.0 * params.hbar / Sg, 201)
    coefficient = np.array([
        [joint_reflected_noenv(cfg, float(p), float(P)).coefficient for P in P_grid]
        for p in p_grid
    ])
    marginal = np.array([marginal_reflected_noenv(cfg, float(p)) for p in p_grid])
    total = float(np.trapezoid(marginal, p_grid))
    conditional = None
    if conditional_P is not None:
        conditional = np.array([
            conditional_reflected_noenv(cfg, float(p), conditional_P).coefficient
            for p in p_grid
        ])
    return JointReflectedResult(p=np.asarray(p_grid, float), P=np.asarray(P_grid, float),
                                coefficient=coefficient, marginal=marginal,
                                total_marginal=total, conditional_P=conditional_P,
                                conditional=conditional)


def _recoil_omega(cfg: Model2Config, p: float) -> float:
    """Oscillation rate of the s-integral: light + target recoil phases."""
    m, M, hbar, pb, Pb, _ = _target(cfg)
    delta = p - pb
    return (pb**2 - p**2) / (2.0 * m * hbar) + (Pb**2 - (Pb - delta) ** 2) / (2.0 * M * hbar)


def reflected_density_env(
    cfg: Model2Config,
    p: float,
    D: float | None = None,
    tau: float | None = None,
) -> float:
    """Traced-out reflected density with the target coupled to its environment.

    Single oscillatory s-integral (the first-interaction time is integrated in
    closed form):

        (2m / hbar^2 p_bar) V^2(delta) int_0^tau ds cos(Omega s)
            * ((tau - s)/tau) * (1 - e^-x)/x
            * exp(-D s^3 delta^2 / 3 M^2 hbar^2 - s^2 delta^2 / 4 Sigma^2 M^2),
        x = D s^2 (tau - s) delta^2 / M^2 hbar^2.

    tau = inf is the joint D -> 0, tau -> inf limit and returns the
    environment-free marginal (for fixed D > 0 the density scales as 1/tau and
    vanishes pointwise as tau grows).
    """
    params = cfg.params
    m, M, hbar, pb, _, Sg = _target(cfg)
    if D is None:
        D = params.D
    if tau is None:
        tau = cfg.tau
    if math.isinf(tau):
        return marginal_reflected_noenv(cfg, p)
    if D < 0:
        raise ValueError("D must be nonnegative")
    delta = p - pb
    omega = _recoil_omega(cfg, p)
    beta = D * delta**2 / (3.0 * M**2 * hbar**2)
    gamma = delta**2 / (4.0 * Sg**2 * M**2)
    kappa = D * delta**2 / (M**2 * hbar**2)  # x = kappa s^2 (tau - s)

    def envelope(s):
        x = kappa * s**2 * (tau - s)
        h = np.empty_like(x)
        big = x > 1e-8
        h[big] = -np.expm1(-x[big]) / x[big]
        h[~big] = 1.0 - 0.5 * x[~big]
        return (tau - s) / tau * h * np.exp(-beta * s**3 - gamma * s**2)

    cutoff = decay_cutoff((beta, 3), (gamma, 2))
    upper = min(tau, cutoff)
    scale = min(upper, cutoff)
    integral = integrate_oscillatory(envelope, omega, upper, scale)
    return 2.0 * m / (hbar**2 * pb) * _v_squared(params, delta) * integral


def conditional_reflected_env(
    cfg: Model2Config,
    p: float,
    P: float,
    D: float | None = None,
    tau: float | None = None,
    reduced: bool = False,
    n_u_panels: int = 200,
) -> float:
    """Reflected density at p conditioned on target momentum P, with environment.

    Full double (s, u) quadrature of the second-order expression plus its
    complex conjugate (u = first-interaction time, s = separation of the two
    barrier insertions).  With reduced=True the large-tau form of the
    integrand is used instead: the u-dependent phase is dropped and the final
    growth factor replaced by its limit exp(-s^2 delta^2 / 4 Sigma^2 M^2),
    which collapses the u-integral into the traced-out kernel; the result is
    then the conditional prefactor times reflected_density_env.
    """
    params = cfg.params
    m, M, hbar, pb, Pb, Sg = _target(cfg)
    if D is None:
        D = params.D
    if tau is None:
        tau = cfg.tau
    if not (math.isfinite(tau) and tau > 0):
        raise ValueError("the conditional kernel needs a finite positive tau")
    delta = p - pb
    dP = P - Pb
    G = 4.0 * D * tau * Sg**2 + hbar**2
    suppression = math.exp(-(Sg**2) * ((delta + dP) ** 2 - dP**2) / G)
    if reduced:
        return suppression * reflected_density_env(cfg, p, D=D, tau=tau)
    prefactor = m / (hbar**2 * pb) * _v_squared(params, delta) * suppression

    omega = _recoil_omega(cfg, p)
    beta = D * delta**2 / (3.0 * M**2 * hbar**2)
    kappa = D * delta**2 / (M**2 * hbar**2)

    def integrand(s, u):
        """Complex integrand at arrays s, u of equal shape."""
        s2u = s + 2.0 * u
        phase = -s * omega
        phase = phase - s * (4.0 * D * s2u * Sg**2 + 2.0 * hbar**2) / (
            2.0 * M * hbar * G
        ) * delta * (delta + dP)
        real = -beta * s**3 - kappa * s**2 * u
        real = real + (D * s**2 * delta**2 / (4.0 * M**2 * hbar**2)) * (
            4.0 * D * s2u**2 * Sg**2 + 4.0 * hbar**2 * (s2u - tau)
        ) / G
        return np.exp(real + 1j * phase)

    # outer oscillatory s-grid.  The real exponent is convex in u, so it is
    # maximized at the u-endpoints, and both endpoints decay at least as fast
    # as exp(-beta s^3 / 4): that is the only uniform-in-u cutoff (the Zeno
    # factor gamma_lim suppresses the u ~ 0 region only).
    s_cut = decay_cutoff((0.25 * beta, 3))
    upper = min(tau, s_cut)
    h_osc = math.pi / abs(omega) if omega != 0.0 else upper
    h = min(h_osc, 0.125 * upper)
    n_s = int(math.ceil(upper / h))
    if n_s > 40_000:
        raise QuadratureError("conditional kernel: too many s panels")
    s_nodes, s_weights = panel_nodes(0.0, upper, n_s)

    total = 0.0 + 0.0j
    for s, w in zip(s_nodes, s_weights):
        u_hi = tau - s
        if u_hi <= 0.0:
            continue
        # the real exponent is a concave-up quadratic in u: resolve it with
        # panels bounded by its total variation
        n_u = min(n_u_panels, max(8, int(8 + kappa * s**2 * u_hi)))
        u, wu = panel_nodes(0.0, u_hi, n_u)
        inner = np.sum(integrand(np.full_like(u, s), u) * wu)
        total += w * inner
    # the displayed expression is I + I*, so only the real part survives
    return float(prefactor * 2.0 * (total / tau).real)


# -- totals and cutoffs -----------------------------------------------------------


def default_p_grid(params: PhysicalParams, n_points: int = 1024) -> np.ndarray:
    pb = params.p_bar
    return np.linspace(-8.0 * pb, 0.0, n_points, endpoint=False)


def clamp_density(density: np.ndarray, floor_fraction: float = 1e-6) -> np.ndarray:
    """Zero out tiny negative quadrature lobes; reject anything deeper.

    The sampled density must stay above -floor_fraction of its peak (anything
    lower signals an unresolved integral, not truncation noise).
    """
    density = np.asarray(density, float)
    peak = float(np.max(density)) if density.size else 0.0
    low = float(np.min(density))
    if low < -floor_fraction * max(peak, 0.0):
        raise QuadratureError(
            f"density dips to {low:.3e}, below -{floor_fraction:g} of the peak"
        )
    return np.where(density < 0.0, 0.0, density)


def total_reflected_model2(
    cfg: Model2Config,
    D_values,
    p_grid: np.ndarray | None = None,
    tau: float | None = None,
) -> np.ndarray:
    """Total reflected probability versus diffusion constant (quadrature over p < 0).

    When the configuration pins the target to its steady width, Sigma tracks
    each swept D value.
    """
    if p_grid is None:
        p_grid = default_p_grid(cfg.params)
    totals = []
    for D in D_values:
        c = cfg.with_D(D) if cfg.steady_target else cfg
        dens = clamp_density(
            [reflected_density_env(c, p, D=D, tau=tau) for p in p_grid])
        totals.append(float(np.trapezoid(dens, p_grid)))
    return np.array(totals)


@dataclass(frozen=True)
class CutoffReport:
    """The three s-integral cutoff timescales of the environment kernel."""

    T_z: float
    T_d_p: float
    T_1: float
    dominant: str
    t_E: float
    margin: float
    suppressed: bool


def timescale_cutoffs_model2(cfg: Model2Config, D: float | None = None,
                             threshold: float = 0.1) -> CutoffReport:
    """Smallest of the target Zeno, momentum-decoherence and accumulated-
    fluctuation timescales, compared against the scattering time t_E.

    T_1 = M hbar / (p_bar sqrt(D t_z)) = T_d_p^(3/2) t_z^(-1/2); reflection is
    suppressed when min(T_z, T_d_p, T_1) << t_E.
    """
    params = cfg.params
    m, M, hbar, pb, _, Sg = _target(cfg)
    if D is None:
        D = params.D
    if D <= 0:
        raise ValueError("cutoff report requires D > 0")
    if cfg.steady_target:
        Sg = steady_target_width(M, D, hbar)
    t_E = hbar / params.energy
    t_z = m * params.sigma / pb
    T_z = M * Sg / pb
    T_d_p = (M**2 * hbar**2 / (D * pb**2)) ** (1.0 / 3.0)
    T_1 = M * hbar / (pb * math.sqrt(D * t_z))
    named = {"T_z": T_z, "T_d_p": T_d_p, "T_1": T_1}
    dominant = min(named, key=named.get)
    margin = named[dominant] / t_E
    return CutoffReport(T_z=T_z, T_d_p=T_d_p, T_1=T_1, dominant=dominant,
                        t_E=t_E, margin=margin, suppressed=margin < threshold)
