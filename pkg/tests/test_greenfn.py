import math

import numpy as np
import pytest

from langmuir_kit.greenfn import (NumericalInstabilityError, check_memory_kernel_sign,
                                  memory_kernel, physical_green_synthesis,
                                  physical_regular_synthesis, regular_part_spectral,
                                  solve_mode_green)
from langmuir_kit.linear_field import gaussian_data
from langmuir_kit.numerics import fit_power_law, gauss_legendre_panels, quadrature_weights


@pytest.fixture(scope="module")
def g1(ev):
    return solve_mode_green(ev, 1.0, 100.0, 0.02)


def test_memory_kernel_trivial_cases(ev, ev_vac):
    t = np.linspace(0, 10, 11)
    assert np.all(memory_kernel(ev_vac, 1.0)(t) == 0.0)
    assert np.all(memory_kernel(ev, 0.0)(t) == 0.0)


def test_memory_kernel_laplace_sign(ev):
    assert check_memory_kernel_sign(ev, 1.0, [1.0, 2.0 + 1.0j, 0.5 - 0.7j]) < 1e-6
    lap = memory_kernel(ev, 1.0).laplace(1.0)
    assert abs(lap - (ev.eval_M(1.0, 1.0) - (1.0 + 1.0 + 4.0))) < 1e-6


def test_green_initial_conditions_and_reality(g1):
    assert g1.G[0] == 0.0 and g1.dG[0] == 1.0
    assert np.isrealobj(g1.G)
    assert g1.a_minus == g1.a_plus.conjugate()


def test_green_derivative_consistency(g1):
    fd = np.gradient(g1.G, g1.dt, edge_order=2)
    assert np.max(np.abs(fd[5:-5] - g1.dG[5:-5])) < 2e-3 * g1.dt ** 2 / 0.02 ** 2


def test_split_identities(ev):
    for k in (0.5, 1.0, 2.0):
        ids = solve_mode_green(ev, k, 10.0, 0.02).split_identities()
        assert ids["value"] < 1e-6 and ids["derivative"] < 1e-6


def test_regular_part_nonzero_and_decaying(g1):
    reg = g1.regular
    assert np.max(np.abs(reg)) > 1e-6
    from langmuir_kit.numerics import tail_envelope
    fit = fit_power_law(g1.times, tail_envelope(reg), (10.0, 100.0))
    assert fit.exponent >= 2.0


def test_regular_part_spectral_agrees(ev, g1):
    t = g1.times[::50]
    spec = regular_part_spectral(ev, 1.0, t)
    assert np.max(np.abs(spec - g1.regular[::50])) < 1e-8


def test_green_laplace_transform_inverts_symbol(ev):
    g = solve_mode_green(ev, 1.0, 60.0, 0.01)
    w = quadrature_weights(g.times.size - 1) * g.dt
    for lam in (1.0, 2.0 + 1.0j):
        L = np.sum(w * np.exp(-lam * g.times) * g.G)
        assert abs(L * ev.eval_M(lam, 1.0) - 1.0) < 1e-4


def test_vacuum_green(ev_vac):
    for k in (0.0, 0.5, 2.0):
        g = solve_mode_green(ev_vac, k, 20.0, 1e-3)
        nu = math.sqrt(1 + k * k)
        assert np.max(np.abs(g.G - np.sin(nu * g.times) / nu)) < 1e-6
        assert np.max(np.abs(g.regular)) < 1e-6


def test_instability_detected(ev, monkeypatch):
    # the trigonometric scheme is exact for the free part, so force a growing series
    from langmuir_kit import greenfn
    from langmuir_kit.numerics import SampledSeries

    def growing(omega_sq, kernel, t_max, dt, richardson=2, with_derivative=False):
        t = dt * np.arange(int(round(t_max / dt)) + 1)
        s = SampledSeries(t, np.exp(t))
        return (s, s) if with_derivative else s

    monkeypatch.setattr(greenfn, "volterra_second_order", growing)
    with pytest.raises(NumericalInstabilityError, match="reduce dt"):
        solve_mode_green(ev, 1.0, 20.0, 0.5)


def test_synthesis_at_origin(curve):
    q, w = gauss_legendre_panels(0.0, 6.5, 64, 16)
    ref = np.sum(w * curve.a_plus_at(q) * gaussian_data(q) * q * q) / (2 * math.pi ** 2)
    val = physical_green_synthesis(curve, gaussian_data, 0.0, [0.0], 1, "potential", 6.5)[0]
    assert abs(val - ref) < 1e-12


def test_synthesis_branches_conjugate(curve):
    r = np.linspace(0, 10, 7)
    p = physical_green_synthesis(curve, gaussian_data, 5.0, r, 1, "potential", 6.5)
    m = physical_green_synthesis(curve, gaussian_data, 5.0, r, -1, "potential", 6.5)
    assert np.allclose(p, m.conj(), atol=1e-14)


def test_vacuum_synthesis_decay_rate(curve_vac):
    ts = np.geomspace(10.0, 200.0, 8)
    sup = []
    for t in ts:
        r = np.linspace(0.0, 0.995 * t, 300)
        sup.append(np.max(np.abs(2 * physical_green_synthesis(curve_vac, gaussian_data, t, r, 1,
                                                               "gradient", 6.5).real)))
    assert abs(fit_power_law(ts, np.array(sup), (10.0, 200.0), min_samples=4).exponent - 1.5) < 0.2


def test_regular_synthesis_vacuum_is_zero(ev_vac):
    assert np.all(physical_regular_synthesis(ev_vac, gaussian_data, 10.0, [0.0, 1.0], 6.5) == 0.0)
