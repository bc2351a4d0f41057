import math

import numpy as np
import pytest

from langmuir_kit.dispersion import DielectricEvaluator, solve_nu_star
from langmuir_kit.equilibria import canonical_profile, kappa0_sq, marginal_kernel
from langmuir_kit.nonlinear1d import (SimConfig, SimulationConfigError, Simulator, _XShift,
                                      init_state, make_grid, read_snapshot, run_experiment,
                                      write_snapshot)

SMALL = dict(nx=32, nv=256, dt=0.02, diag_every=50)


def test_equilibrium_is_stationary():
    rep = run_experiment(SimConfig(t_end=2.0, perturbation="none", **SMALL), record_mode_every_step=True)
    assert np.max(np.abs(rep.mode_series)) < 1e-12
    assert rep.mass_drift < 1e-14
    assert np.max(np.abs(rep.series("sup_E"))) < 1e-12


def test_equilibrium_mass_matches_ions():
    cfg = SimConfig(**SMALL)
    st, grid = init_state(SimConfig(perturbation="none", **SMALL))
    assert np.allclose(st.f.sum(axis=1) * grid.dv, cfg.n_ions, rtol=0, atol=1e-14)


def test_free_transport_shift():
    tau = 0.37
    errs = []
    for nx in (64, 128):
        grid = make_grid(SimConfig(nx=nx, nv=16))
        f = np.repeat(np.sin(2 * grid.x)[:, None], 16, axis=1)
        exact = np.sin(2 * (grid.x[:, None] - grid.vhat[None, :] * tau))
        errs.append(np.max(np.abs(_XShift(grid, tau)(f) - exact)))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.15)
    assert np.array_equal(_XShift(grid, 0.0)(f), f)


def test_snapshot_round_trip(tmp_path):
    sim = Simulator(SimConfig(t_end=0.2, **SMALL))
    for _ in range(3):
        sim.step()
    p = tmp_path / "snap.bin"
    write_snapshot(p, sim.state)
    back = read_snapshot(p, sim.state.n_ions)
    assert np.array_equal(back.f, sim.state.f)
    assert np.array_equal(back.phi, sim.state.phi)
    assert np.array_equal(back.phi_t, sim.state.phi_t)
    assert back.time == sim.state.time
    assert p.stat().st_size == 32 + 8 * (32 * 256 + 2 * 32)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"garbage!" + bytes(24))
    with pytest.raises(ValueError):
        read_snapshot(bad)


@pytest.mark.parametrize("kw", [dict(nx=4), dict(dt=-1.0), dict(n_ions=-0.1),
                                dict(perturbation="wave"), dict(mode=0), dict(mode=16, nx=32),
                                dict(t_end=1.005, dt=0.01), dict(dt=0.5, nx=256),
                                dict(diag_every=0), dict(v_max=0.5)])
def test_config_errors(kw):
    with pytest.raises(SimulationConfigError):
        Simulator(SimConfig(**kw))


@pytest.fixture(scope="module")
def small_runs():
    out = {}
    for a in (1e-3, 5e-4):
        cfg = SimConfig(t_end=40.0, amplitude=a, **SMALL)
        out[a] = (cfg, run_experiment(cfg, record_mode_every_step=True))
    return out


def test_linear_frequency(small_runs):
    cfg, rep = small_runs[1e-3]
    prof = canonical_profile(cfg.m0, cfg.n_ions, dim=1)
    ev = DielectricEvaluator(marginal_kernel(prof), cfg.m0, kappa0_sq(prof))
    nu = solve_nu_star(ev, cfg.k1).nu
    t = cfg.dt * np.arange(rep.mode_series.size)
    m = rep.mode_series.real[t > 10]
    zeros = t[t > 10][1:][np.diff(np.sign(m)) != 0]
    assert math.pi / np.mean(np.diff(zeros)) == pytest.approx(nu, rel=1e-2)


def test_amplitude_scaling(small_runs):
    a = np.max(np.abs(small_runs[1e-3][1].mode_series))
    b = np.max(np.abs(small_runs[5e-4][1].mode_series))
    assert a / b == pytest.approx(2.0, rel=0.05)


def test_field_perturbation_energy():
    rep = run_experiment(SimConfig(t_end=10.0, perturbation="field", amplitude=0.05, **SMALL))
    assert rep.energy_drift < 1e-3
    assert rep.series("field")[0] > 0
    assert rep.series("coupling")[0] == pytest.approx(0.0, abs=1e-14)
    assert np.max(np.abs(rep.series("coupling"))) > 0


def test_clipped_mass_accounts_for_mass_change():
    rep = run_experiment(SimConfig(nx=32, nv=128, dt=0.02, t_end=10.0, amplitude=0.5, diag_every=10))
    clipped = rep.series("clipped_mass")
    mass = rep.series("mass")
    assert clipped[-1] > 0
    assert np.all(np.diff(clipped) >= 0)
    assert mass[-1] - mass[0] == pytest.approx(clipped[-1], rel=1e-6)


def test_field_decay_fit_reports(small_runs):
    fit = small_runs[1e-3][1].field_decay_fit((5.0, 40.0))
    assert np.isfinite(fit.exponent)


def test_blow_up_guard():
    sim = Simulator(SimConfig(t_end=1.0, **SMALL))
    sim.state.f[0, 128] = 1e3
    with pytest.raises(FloatingPointError):
        sim.step()
