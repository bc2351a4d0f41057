import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langmuir_kit.dispersion import (DielectricEvaluator, DispersionAssertionError,
                                     OnCriticalSegmentError, bohm_gross_compare, check_curve,
                                     curve_residuals, dispersion_curve, penrose_scan,
                                     resonance_symbol_identity, resonance_terms, residue_numeric,
                                     solve_nu_star)
from langmuir_kit.equilibria import marginal_kernel, polynomial_profile, pressure_coefficient_e0
from langmuir_kit.oracles import dielectric_3d, dielectric_3d_bruteforce


# ------------------------------------------------------------------ symbol

def test_vacuum_symbol(ev_vac):
    assert ev_vac.eval_M(0.5, 1.0) == pytest.approx(2.25, abs=1e-15)
    assert ev_vac.eval_Psi(3.0, 1.0) == pytest.approx(-3.0 + 1.0 + 1.0, abs=1e-15)


def test_k_zero_symbol(ev):
    lam = 0.7 + 0.3j
    assert ev.eval_M(lam, 0.0) == pytest.approx(lam * lam + 4.0, abs=1e-15)


def test_symbol_matches_velocity_integral(ev, canon):
    a = ev.eval_M(1.0, 1.0)
    assert abs(a - dielectric_3d(canon, 1.0 + 0j, 1.0)) < 1e-6 * abs(a)
    assert abs(a - dielectric_3d_bruteforce(canon, 1.0 + 0j, 1.0)) < 1e-6 * abs(a)


def test_symbol_reality(ev, rng):
    for _ in range(5):
        lam = complex(rng.uniform(0.1, 2), rng.uniform(-3, 3))
        k = rng.uniform(0.1, 4)
        assert abs(ev.eval_M(lam.conjugate(), k) - ev.eval_M(lam, k).conjugate()) < 1e-12


def test_critical_segment_rejected(ev):
    with pytest.raises(OnCriticalSegmentError):
        ev.eval_M(0.3j, 1.0)
    with pytest.raises(ValueError):
        ev.eval_M(-0.1, 1.0)


def test_boundary_values(ev):
    k = 1.0
    assert ev.eval_M_boundary(0.0, k) == pytest.approx(k * k + ev.tau0_sq, abs=1e-13)
    assert ev.eval_M_boundary(0.0, k).imag == 0.0
    assert ev.eval_M_boundary(0.5 * (1 + ev.u_max), k).imag == 0.0


def test_boundary_is_plemelj_limit(ev):
    k, tau = 1.0, 0.5 * ev.u_max
    b = ev.eval_M_boundary(tau, k)
    assert b.imag == pytest.approx(math.pi * tau * float(ev.kernel(tau)), rel=1e-12)
    g = 1e-4
    m1 = ev.eval_M(complex(g, tau) * k, k)
    m2 = ev.eval_M(complex(g / 2, tau) * k, k)
    # first-order convergence in gamma; one extrapolation step
    assert abs(2 * m2 - m1 - b) < 1e-6


def test_boundary_batch_matches_scalar(ev):
    taus = np.linspace(-1, 1, 9)
    batch = ev.boundary_batch(taus, np.array([0.5, 2.0]))
    for i, k in enumerate((0.5, 2.0)):
        for j, t in enumerate(taus):
            assert abs(batch[i, j] - ev.eval_M_boundary(t, k)) < 1e-10


# ------------------------------------------------------------------- Psi and roots

def test_psi_endpoints(ev):
    assert ev.psi(0.0) == pytest.approx(ev.m0 ** 2, abs=1e-14)
    k = 1.3
    assert ev.eval_Psi(k * k * (1 + 1e-12), k) == pytest.approx(ev.m1_sq, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(1e-3, 10.0), st.floats(1e-3, 10.0))
def test_Psi_strictly_decreasing(k, a, b):
    from langmuir_kit.acceptance import canonical_evaluator
    ev = canonical_evaluator()
    x1 = k * k + min(a, b)
    x2 = k * k + max(a, b) + 1e-3
    assert ev.eval_Psi(x2, k) < ev.eval_Psi(x1, k)


def test_Psi_prime_matches_difference(ev):
    k, x = 1.0, 4.0
    h = 1e-5
    fd = (ev.eval_Psi(x + h, k) - ev.eval_Psi(x - h, k)) / (2 * h)
    assert ev.eval_Psi_prime(x, k) == pytest.approx(fd, rel=1e-7)


def test_vacuum_roots(ev_vac):
    for k in (0.0, 0.5, 2.0):
        r = solve_nu_star(ev_vac, k)
        nu = math.sqrt(k * k + 1.0)
        assert r.nu == pytest.approx(nu, abs=1e-12)
        assert abs(r.a_plus - (-1j / (2 * nu))) < 1e-12
        assert abs(r.a_minus - (1j / (2 * nu))) < 1e-12


def test_k_zero_root_is_field_mass(ev):
    assert solve_nu_star(ev, 0.0).nu == pytest.approx(ev.m0, abs=1e-12)


def test_canonical_root_residual_and_simple_zero(ev):
    r = solve_nu_star(ev, 1.0)
    assert abs(ev.eval_M(1j * r.nu, 1.0)) < 1e-10
    vals = [abs(ev.eval_M(1j * r.nu * (1 + e), 1.0)) for e in (1e-4, 2e-4, 4e-4)]
    assert vals[1] / vals[0] == pytest.approx(2.0, rel=1e-3)
    assert vals[2] / vals[1] == pytest.approx(2.0, rel=1e-3)


def test_residues_analytic_vs_numeric(ev):
    for k in (0.3, 1.0, 3.0):
        r = solve_nu_star(ev, k)
        assert abs(residue_numeric(ev, r) - r.a_plus) < 1e-8
        assert r.a_minus == r.a_plus.conjugate()


# ------------------------------------------------------------------------ curve

def test_curve_derivatives_against_differences(ev):
    k = np.linspace(0.5, 1.5, 11)
    c = dispersion_curve(ev, k)
    h = 1e-4
    for i in (2, 5, 8):
        nm, n0, np_ = (solve_nu_star(ev, k[i] + d).nu for d in (-h, 0.0, h))
        assert c.nu_prime[i] == pytest.approx((np_ - nm) / (2 * h), rel=1e-7)
        assert c.nu_second[i] == pytest.approx((np_ - 2 * n0 + nm) / h ** 2, rel=1e-4)


def test_vacuum_curve_derivative(ev_vac):
    k = np.linspace(0.0, 3.0, 31)
    c = dispersion_curve(ev_vac, k)
    assert np.allclose(c.nu_prime, k / np.sqrt(k * k + 1.0), atol=1e-12)


def test_small_k_expansion(ev):
    ks = np.linspace(1e-3, 1e-2, 10)
    x = np.array([solve_nu_star(ev, k).x for k in ks])
    slope = np.mean((x - ev.m0 ** 2) / ks ** 2)
    psi_p0 = ev.kernel.moment(2)
    assert slope == pytest.approx(1.0 + psi_p0 / ev.m0 ** 2, rel=1e-3)


def test_canonical_curve_properties(curve, ev):
    check_curve(curve)
    k = curve.k_grid
    assert np.all(curve.nu > k)
    assert np.all((curve.nu_prime >= 0) & (curve.nu_prime < 1))
    b = curve.behaviour_constants()
    assert b["nu_over_bracket_min"] > 0 and b["convexity_c0"] > 0
    # |a+| nu is bounded, so |a+| <~ 1/<k>
    assert b["residue_times_nu_max"] < 1.0
    sel = slice(0, None, 50)
    sub = dispersion_curve(ev, k[sel])
    assert np.max(curve_residuals(ev, sub)) < 1e-10


def test_check_curve_reports_violation(curve):
    from dataclasses import replace
    bad = replace(curve, nu_second=-curve.nu_second)
    with pytest.raises(DispersionAssertionError, match="k ="):
        check_curve(bad)


def test_unstable_kernel_rejected():
    p = polynomial_profile(2.0, 4, 2.0, 1.0, check_stability=False)
    with pytest.raises(ValueError):
        DielectricEvaluator(marginal_kernel(p), 2.0)


# ---------------------------------------------------------------------- Penrose

def test_penrose_vacuum(ev_vac):
    rep = penrose_scan(ev_vac, np.linspace(0.1, 5, 20), np.linspace(-1, 1, 21))
    Mb = ev_vac.boundary_batch(np.linspace(-1, 1, 21), np.linspace(0.1, 5, 20))
    assert np.all(np.abs(Mb) >= 1.0 - 1e-14)
    assert rep.c > 0


def test_penrose_endpoints_real(ev):
    for k in (0.5, 2.0):
        for t in (-1.0, 1.0):
            m = ev.eval_M_boundary(t, k)
            assert m.imag == 0.0
            assert m.real >= ev.tau0_sq - 1e-12


def test_penrose_canonical(ev):
    rep = penrose_scan(ev, np.linspace(5 / 81, 5, 81), np.linspace(-1, 1, 81))
    assert rep.c > 0.5


def test_bohm_gross_report(ev, curve, canon):
    small = dispersion_curve(ev, np.linspace(0.01, 0.3, 30))
    rep = bohm_gross_compare(ev, small, canon.n_ions, pressure_coefficient_e0(canon))
    assert np.all(np.diff(rep["nu_sq"]) > 0) and np.all(np.diff(rep["classical"]) > 0)
    # the exact small-k line is tangent to nu*^2 at k = 0
    assert abs(rep["nu_sq"][0] - rep["exact_small_k"][0]) < 1e-6


# -------------------------------------------------------------------- resonance

def _vac_nu(q):
    return math.sqrt(1.0 + q * q)


def test_resonance_k_zero_cancels():
    ell = np.array([0.3, -0.2, 0.5])
    v = np.array([0.1, 0.4, -0.2])
    lhs, rhs, _ = resonance_terms(_vac_nu, np.zeros(3), ell, v)
    assert np.max(np.abs(lhs)) < 1e-15 and np.max(np.abs(rhs)) < 1e-15


def test_resonance_ell_equals_k():
    k = np.array([0.4, 0.1, -0.3])
    v = np.array([0.2, -0.1, 0.3])
    lhs, rhs, _ = resonance_terms(_vac_nu, k, k, v)
    # k - ell = 0 leaves only ell * w_-(0)^2 = -k nu(0)^2
    assert np.allclose(lhs, -k * _vac_nu(0.0) ** 2, atol=1e-14)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_resonance_identity_exact(xs):
    k, ell, v = (np.array(xs[i:i + 3]) for i in (0, 3, 6))
    vh = v / math.sqrt(1 + v @ v)
    assert resonance_symbol_identity(_vac_nu, k, ell, vh) < 1e-10 * (1 + np.linalg.norm(k) + np.linalg.norm(ell)) ** 3


def test_resonance_with_tabulated_curve(curve):
    rng = np.random.default_rng(3)
    for _ in range(10):
        k, ell = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        v = rng.normal(size=3)
        assert resonance_symbol_identity(curve.nu_at, k, ell, v / math.sqrt(1 + v @ v)) < 1e-10
