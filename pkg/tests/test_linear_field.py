import math

import numpy as np
import pytest

from langmuir_kit.dispersion import DielectricEvaluator
from langmuir_kit.equilibria import MarginalKernel
from langmuir_kit.greenfn import memory_kernel, solve_mode_green
from langmuir_kit.linear_field import (CFLViolation, GridMismatchError, InitialData,
                                       bump_marginal, decompose_field, evolve_green_path,
                                       free_density, kinetic_mode_oracle,
                                       relative_sup_difference)
from langmuir_kit.numerics import SampledSeries, causal_convolution, fit_power_law, tail_envelope
from langmuir_kit.oracles import free_density_radial

BUMP = bump_marginal(4, 1.0)


def test_free_density_basics():
    d = InitialData(BUMP)
    # int (1 - u^2)^4 du = 256/315
    assert free_density(d, 1.0, [0.0])[0] == pytest.approx(256 / 315, abs=1e-14)
    assert np.allclose(free_density(d, 0.0, [0.0, 3.0, 50.0]), 256 / 315, atol=1e-14)
    assert np.all(free_density(InitialData(), 1.0, [0.0, 1.0]) == 0)


def test_free_density_matches_velocity_integral():
    # radial g(v) = (4/pi) <v>^-11 has u-marginal (1 - u^2)^4
    def gamma(s):
        return 4.0 / math.pi * s ** -11.0

    d = InitialData(BUMP)
    for k, t in ((1.0, 0.0), (1.0, 3.0), (2.0, 7.5)):
        ref = free_density_radial(gamma, k, t, rho_max=200.0)
        assert abs(free_density(d, k, [t])[0] - ref) < 1e-9


def test_vacuum_green_path(ev_vac):
    g = solve_mode_green(ev_vac, 1.0, 20.0, 0.01)
    nu = math.sqrt(2.0)
    a = evolve_green_path(g, InitialData(phi0=1.0))
    b = evolve_green_path(g, InitialData(phi1=1.0))
    assert np.max(np.abs(a.values - np.cos(nu * g.times))) < 1e-8
    assert np.max(np.abs(b.values - np.sin(nu * g.times) / nu)) < 1e-8


def test_vacuum_oracle(ev_vac):
    data = InitialData(BUMP, phi0=0.3, phi1=-0.2)
    g = solve_mode_green(ev_vac, 1.0, 20.0, 0.01)
    a = evolve_green_path(g, data)
    b = kinetic_mode_oracle(ev_vac, data, 1.0, 20.0, 0.01)
    assert relative_sup_difference(a, b) < 1e-6


def test_mixed_data_green_vs_kinetic(ev):
    data = InitialData(bump_marginal(4, 0.7), 1.0, phi0=0.4 + 0.1j, phi1=-0.3)
    g = solve_mode_green(ev, 1.0, 50.0, 0.02)
    a = evolve_green_path(g, data)
    b = kinetic_mode_oracle(ev, data, 1.0, 50.0, 0.01)
    b = SampledSeries(b.times[::2], b.values[::2])
    assert relative_sup_difference(a, b) < 1e-4


def test_linearity_both_paths(ev):
    d1 = InitialData(bump_marginal(4, 1.0), phi0=0.5)
    d2 = InitialData(bump_marginal(2, 0.6), phi1=1.0)
    al, be = 0.7, -1.3

    def comb(u):
        return al * d1.sigma(u) + be * d2.sigma(u)

    d12 = InitialData(comb, 1.0, al * d1.phi0 + be * d2.phi0, al * d1.phi1 + be * d2.phi1)
    g = solve_mode_green(ev, 1.0, 10.0, 0.02)
    for run in (lambda d: evolve_green_path(g, d).values,
                lambda d: kinetic_mode_oracle(ev, d, 1.0, 10.0, 0.02).values):
        lhs = run(d12)
        rhs = al * run(d1) + be * run(d2)
        assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(lhs))


def test_k_zero_mode_is_pure_oscillator(ev):
    data = InitialData(BUMP, phi0=0.2, phi1=0.5)
    g = solve_mode_green(ev, 0.0, 20.0, 0.01)
    t = g.times
    m, rho = ev.m0, 256 / 315
    ref = 0.2 * np.cos(m * t) + 0.5 * np.sin(m * t) / m - rho * (1 - np.cos(m * t)) / m ** 2
    assert np.max(np.abs(evolve_green_path(g, data).values - ref)) < 1e-6


def test_decomposition_vacuum_and_exactness(ev_vac, ev):
    g = solve_mode_green(ev_vac, 1.0, 20.0, 0.01)
    dec = decompose_field(g, InitialData(BUMP, phi0=1.0))
    assert np.max(np.abs(dec.regular)) < 1e-8
    g = solve_mode_green(ev, 1.0, 20.0, 0.02)
    dec = decompose_field(g, InitialData(BUMP, phi1=1.0))
    assert np.max(np.abs(dec.total - dec.oscillatory - dec.regular)) == 0.0


def test_regular_decays_faster_than_oscillatory(ev):
    g = solve_mode_green(ev, 1.0, 100.0, 0.02)
    dec = decompose_field(g, InitialData(BUMP))
    fo = fit_power_law(dec.times, tail_envelope(dec.oscillatory), (10, 100))
    fr = fit_power_law(dec.times, tail_envelope(dec.regular), (10, 100))
    assert fr.exponent > fo.exponent


def test_born_approximation(ev):
    # phi1-only data: phi = G. To first order in the coupling delta,
    # G = G0 - delta G0 * N1 * G0 with N1 the memory kernel of the unscaled kappa
    k = 1.0
    kern = ev.kernel
    T, dt = 20.0, 0.01
    g0 = solve_mode_green(DielectricEvaluator(MarginalKernel(kern.u_grid, 0 * kern.values, kern.u_max), ev.m0), k, T, dt)
    N1 = memory_kernel(ev, k)(g0.times)
    G1 = -causal_convolution(g0.G, causal_convolution(N1, g0.G, dt), dt)
    rem, rem_kin = [], []
    for delta in (1e-3, 5e-4):
        evd = DielectricEvaluator(MarginalKernel(kern.u_grid, delta * kern.values, kern.u_max), ev.m0)
        rem.append(np.max(np.abs(solve_mode_green(evd, k, T, dt).G - g0.G - delta * G1)))
        phi = kinetic_mode_oracle(evd, InitialData(phi1=1.0), k, T, dt).values
        rem_kin.append(np.max(np.abs(phi - g0.G - delta * G1)))
    assert rem[0] / rem[1] == pytest.approx(4.0, rel=0.05)
    # the kinetic path agrees up to its own O(dt^2) floor
    assert max(rem_kin) < 1e-7


def test_grid_and_cfl_errors(ev):
    g = solve_mode_green(ev, 1.0, 5.0, 0.02)
    with pytest.raises(GridMismatchError):
        evolve_green_path(g, InitialData(phi0=1.0), np.linspace(0, 5, 11))
    a = SampledSeries(np.arange(5) * 0.1, np.ones(5))
    b = SampledSeries(np.arange(6) * 0.1, np.ones(6))
    with pytest.raises(GridMismatchError):
        relative_sup_difference(a, b)
    with pytest.raises(CFLViolation):
        kinetic_mode_oracle(ev, InitialData(phi0=1.0), 1.0, 10.0, 0.5)
    with pytest.raises(ValueError):
        kinetic_mode_oracle(ev, InitialData(phi0=1.0), 1.0, 1.0, 0.01, n_u=256)
    with pytest.raises(ValueError):
        InitialData(u_support=1.5)
