"""Single-particle perturbative kernels: propagators, densities, totals."""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from qreflect import (EnvironmentSpec, PhysicalParams, PotentialSpec,
                      born_delta_coefficient, broadening_factor_integral,
                      propagator_momentum, propagator_position, reflected_density_p,
                      reflected_density_x, reflected_spectrum, sweep_total_p,
                      total_reflected, narrow_sideband_ratio)

GAUSS = PotentialSpec.gaussian(0.01, 0.1)


def make_params(**kw):
    kw.setdefault("potential", GAUSS)
    return PhysicalParams(**kw)


# -- free density-matrix propagators ------------------------------------------


def test_position_propagator_diagonal_decoherence_free():
    params = make_params()
    j_diag = propagator_position(0.4, 0.4, 1.0, -0.2, -0.2, 0.0, params, D=3.0)
    j_free = propagator_position(0.4, 0.4, 1.0, -0.2, -0.2, 0.0, params, D=0.0)
    assert j_diag == pytest.approx(j_free, rel=1e-14)


def test_position_propagator_unitary_limit_is_kernel_product():
    params = make_params()
    m, hbar, t = 1.0, 1.0, 0.8
    x, y, xp, yp = 0.7, -0.3, 0.1, 0.6

    def free_kernel(a, b):
        return np.sqrt(m / (2j * math.pi * hbar * t)) * np.exp(
            1j * m * (a - b) ** 2 / (2 * hbar * t)
        )

    expected = free_kernel(x, xp) * np.conj(free_kernel(y, yp))
    got = propagator_position(x, y, t, xp, yp, 0.0, params, D=0.0)
    assert got == pytest.approx(expected, rel=1e-12)


def test_position_propagator_trace_preservation():
    # propagate a Gaussian pure-state pair through the kernel: the trace of
    # the evolved density matrix must stay 1, which packages the
    # delta(x' - y') property of the x-integrated propagator
    params = make_params()
    D, t, sigma = 1.0, 0.7, 1.0
    xp = np.linspace(-7, 7, 281)
    dxp = xp[1] - xp[0]
    psi0 = (2 * math.pi * sigma**2) ** -0.25 * np.exp(
        -(xp**2) / (4 * sigma**2) + 1j * 0.8 * xp)
    rho0 = np.outer(psi0, np.conj(psi0))
    x = np.linspace(-12, 12, 481)
    dx = x[1] - x[0]
    diag = np.empty_like(x)
    for i, xi in enumerate(x):
        J = propagator_position(xi, xi, t, xp[:, None], xp[None, :], 0.0, params, D)
        diag[i] = np.real(np.sum(J * rho0)) * dxp**2
    trace = float(np.sum(diag) * dx)
    assert trace == pytest.approx(1.0, abs=1e-6)


def test_momentum_propagator_populations_free():
    params = make_params()
    env = EnvironmentSpec.position(2.0)
    val = propagator_momentum(0.9, 0.9, 1.0, 0.9, 0.9, 0.0, params, env)
    gauss = 1.0 / math.sqrt(4 * math.pi * 2.0)
    assert val == pytest.approx(gauss, rel=1e-12)  # only the sideband Gaussian
    env_p = EnvironmentSpec.momentum(1.5)
    assert propagator_momentum(0.9, 0.9, 1.0, 0.9, 0.9, 0.0, params, env_p) == 1.0


def test_momentum_coupling_offdiagonal_damping():
    params = make_params()
    env = EnvironmentSpec.momentum(1.0)
    # D_p * t * (p - q)^2 = 1 damps the off-diagonal by e^-1
    got = propagator_momentum(1.5, 0.5, 1.0, 1.5, 0.5, 0.0, params, env)
    assert abs(got) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_narrow_sideband_acts_as_delta():
    # the diagonal momentum propagator's sideband Gaussian convolves a
    # p_bar-scale test function back to itself within 1% once
    # p_bar^2 >= 100 D t_z
    params = make_params(sigma=0.01)
    D, t_z = 1.0, 0.01
    env = EnvironmentSpec.position(D)
    f = lambda pp: math.exp(-((pp - 1.0) ** 2) / 2.0)
    kernel = lambda pp: float(np.real(
        propagator_momentum(1.0, 1.0, t_z, pp, pp, 0.0, params, env)))
    conv, _ = quad(lambda pp: kernel(pp) * f(pp), -12, 12, limit=200)
    assert abs(conv - f(1.0)) / f(1.0) < 0.01
    assert narrow_sideband_ratio(params, D) == pytest.approx(0.01, rel=1e-12)


# -- position-coupling reflected density ---------------------------------------


def test_zero_coupling_limit_equals_born_coefficient():
    params = make_params()
    for p in (-0.3, -1.0, -2.5):
        got = reflected_density_x(p, params, D=0.0, tau=math.inf)
        v2 = 0.01**2 / (2 * math.pi) * math.exp(-(0.1**2) * (p - 1.0) ** 2)
        assert got == pytest.approx(2 * math.pi * v2, rel=1e-10)
        assert born_delta_coefficient(p, params) == pytest.approx(got, rel=1e-14)


def test_small_coupling_negligible_effect_at_reflection_peak():
    # fluctuation ratio 0.067 << 1: the environment changes the peak density
    # by less than 1%
    params = make_params(D=1e-5, sigma=10.0)
    assert params.sigma_p / params.p_bar < 0.1
    tau = params.tau_default
    rho_env = reflected_density_x(-1.0, params, D=1e-5, tau=tau)
    rho_free = reflected_density_x(-1.0, params, D=0.0, tau=tau)
    assert abs(rho_env - rho_free) / rho_free < 0.01


def test_x_kernel_against_double_time_quadrature():
    params = make_params(D=1.0, sigma=10.0)
    tau = params.tau_default
    p = -1.0
    omega = (p * p - 1.0) / 2.0
    beta = 1.0 * (p - 1.0) ** 2 / 12.0
    f = lambda u, s: math.cos(omega * s) * math.exp(-beta * s**3)
    val, _ = dblquad(f, 0, 6.0, 0, lambda s: tau - s, epsabs=1e-12, epsrel=1e-10)
    from qreflect import potential_momentum
    v2 = float(potential_momentum(GAUSS, p - 1.0)) ** 2
    brute = 2.0 * v2 * val / tau
    assert reflected_density_x(p, params, D=1.0, tau=tau) == pytest.approx(brute, rel=1e-4)


def test_x_kernel_matches_scipy_oscillatory_quadrature():
    params = make_params(D=0.3)
    for p in (-0.6, -1.7):
        omega = (p * p - 1.0) / 2.0
        beta = 0.3 * (p - 1.0) ** 2 / 12.0
        ref, _ = quad(lambda s: math.exp(-beta * s**3), 0, 60.0,
                      weight="cos", wvar=omega, limit=2000)
        from qreflect import potential_momentum
        v2 = float(potential_momentum(GAUSS, p - 1.0)) ** 2
        expected = 2.0 * v2 * ref
        got = reflected_density_x(p, params, D=0.3, tau=math.inf)
        assert got == pytest.approx(expected, rel=1e-8)


# -- momentum-coupling reflected density ----------------------------------------


def test_p_kernel_closed_value_at_reflection_peak():
    params = make_params()
    for D_p in (0.5, 1.0, 2.0):
        v2 = 0.01**2 * math.exp(-0.04) / (2 * math.pi)
        assert reflected_density_p(-1.0, params, D_p) == pytest.approx(
            v2 / (2 * D_p), rel=1e-12)


def test_broadening_factor_is_normalized_identity():
    params = make_params()
    for D_p in (1e-3, 0.05, 1.0, 40.0):
        assert broadening_factor_integral(params, D_p, -1e12, 1e12) == pytest.approx(
            1.0, abs=1e-4)


def test_delta_limit_linear_in_coupling():
    # integrating the broadening factor against smooth test functions
    # converges to their value at -p_bar with error proportional to D_p
    params = make_params()
    tests = [lambda p: math.exp(-((p + 1.0) ** 2) / 2.0),
             lambda p: math.exp(-((p + 1.0) ** 2) / 8.0) * math.cos(0.3 * p),
             lambda p: 1.0 / (1.0 + (p + 1.0) ** 2)]
    for phi in tests:
        couplings = np.array([1e-3, 3e-3, 1e-2, 3e-2])
        errs = []
        for D_p in couplings:
            c = 2.0 * D_p

            def weight(p):
                return (2 * c / math.pi) / ((p + 1.0) ** 2 + c**2 * (p - 1.0) ** 2)

            val, _ = quad(lambda p: weight(p) * phi(p), -80, 80,
                          points=[-1.0], limit=400)
            errs.append(abs(val - phi(-1.0)))
        slope = np.polyfit(np.log(couplings), np.log(errs), 1)[0]
        assert 0.8 <= slope <= 1.2


def test_spread_into_transmitted_region():
    params = make_params()
    p_grid = np.linspace(-3, 3, 1201)
    p_grid = p_grid[np.abs(p_grid - 1.0) > 1e-9]
    dens = np.array([reflected_density_p(p, params, 0.5) for p in p_grid])
    # m hbar D_p = 1: the peak has moved past p = 0
    i_half = np.argmin(np.abs(p_grid - 0.5))
    i_neg = np.argmin(np.abs(p_grid + 1.0))
    assert dens[i_half] > dens[i_neg]
    assert dens[p_grid > 0].sum() / dens.sum() > 0.3


# -- totals -----------------------------------------------------------------------


def test_total_zero_barrier():
    params = make_params(potential=PotentialSpec.gaussian(0.0, 0.1))
    assert total_reflected(params, EnvironmentSpec.momentum(1.0)) == 0.0


def test_total_monotone_and_suppressed():
    params = make_params()
    sweep = np.array([0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0])
    totals = sweep_total_p(params, sweep)
    assert np.all(np.diff(totals) < 0)
    assert totals[-1] / totals[0] < 0.20


def test_total_larger_smearing_smaller_reflection():
    for D_p in (0.1, 1.0, 10.0):
        totals = [total_reflected(make_params(potential=PotentialSpec.gaussian(0.01, a)),
                                  EnvironmentSpec.momentum(D_p))
                  for a in (0.1, 0.2, 0.4)]
        assert totals[0] > totals[1] > totals[2]


def test_densities_scale_as_v0_squared():
    pa = make_params(potential=PotentialSpec.gaussian(0.004, 0.1))
    pb = make_params(potential=PotentialSpec.gaussian(0.008, 0.1))
    for p in (-0.4, -1.0, -2.0):
        assert reflected_density_p(p, pb, 0.7) == pytest.approx(
            4.0 * reflected_density_p(p, pa, 0.7), rel=1e-12)
        assert reflected_density_x(p, pb, D=0.5, tau=20.0) == pytest.approx(
            4.0 * reflected_density_x(p, pa, D=0.5, tau=20.0), rel=1e-12)


def test_spectrum_metadata_and_edge_guard():
    params = make_params()
    spec = reflected_spectrum(params, EnvironmentSpec.momentum(0.5))
    assert spec.total > 0
    assert spec.environment.kind == "momentum_coupling"
    from qreflect import QuadratureError
    with pytest.raises(QuadratureError):
        reflected_spectrum(params, EnvironmentSpec.momentum(0.5),
                           p_grid=np.linspace(-1.5, 0.0, 256, endpoint=False))


def test_triple_oracle_agreement_away_from_incoming_momentum():
    # Born coefficient == zero-coupling x-kernel == integrated p-kernel limit
    params = make_params()
    for p in (-0.5, -1.0, -1.8):
        born = born_delta_coefficient(p, params)
        xk = reflected_density_x(p, params, D=0.0, tau=math.inf)
        assert xk == pytest.approx(born, rel=1e-8)
    # D_p -> 0: the p-kernel integrates against a narrow window around -p_bar
    # to the Born coefficient there
    lo, hi = -1.0 - 0.05, -1.0 + 0.05
    val, _ = quad(lambda p: reflected_density_p(p, params, 1e-5), lo, hi,
                  points=[-1.0], limit=200)
    assert val == pytest.approx(born_delta_coefficient(-1.0, params), rel=1e-3)
