"""Acceptance checks shared by the test suite and the `verify` subcommand.

Each criterion returns a CriterionResult holding named numeric checks. The
checks are deterministic for a given seed; wall-clock time is reported
separately so that CSV output stays reproducible.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .characteristics import (Mode, PowerLawEnvelope, SyntheticField, osc_integral_identity,
                              random_mode_field, reference_decay_field,
                              velocity_decomposition_check)
from .dispersion import (DielectricEvaluator, curve_residuals, dispersion_curve, penrose_scan,
                         resonance_symbol_identity, resonance_terms, solve_nu_star)
from .equilibria import canonical_profile, kappa0_sq, marginal_kernel, vacuum_profile
from .greenfn import regular_part_spectral, solve_mode_green
from .linear_field import (InitialData, bump_marginal, evolve_green_path, field_decay_experiment,
                           kinetic_mode_oracle, relative_sup_difference)
from .nonlinear1d import SimConfig, run_experiment
from .numerics import SampledSeries, fit_power_law, tail_envelope
from .oracles import dielectric_3d


@dataclass
class Check:
    name: str
    value: float
    relation: str
    threshold: object

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if not np.isfinite(v):
            return False
        if self.relation == "<":
            return v < t
        if self.relation == "<=":
            return v <= t
        if self.relation == ">":
            return v > t
        if self.relation == ">=":
            return v >= t
        if self.relation == "in":
            return t[0] <= v <= t[1]
        raise ValueError(self.relation)

    def threshold_text(self) -> str:
        if self.relation == "in":
            return f"[{self.threshold[0]:g}, {self.threshold[1]:g}]"
        return f"{self.relation} {self.threshold:g}"


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    runtime: float = 0.0
    runtime_limit: float | None = None
    error: str | None = None

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        ok = all(c.passed for c in self.checks)
        if self.runtime_limit is not None:
            ok = ok and self.runtime < self.runtime_limit
        return ok

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = [c for c in self.checks if not c.passed]
        detail = f"; failing: {', '.join(c.name for c in worst)}" if worst else ""
        if self.error:
            detail = f"; error: {self.error}"
        return f"[{status}] criterion {self.number}: {self.title} ({self.runtime:.1f} s){detail}"


# ------------------------------------------------------------ shared setups

@lru_cache(maxsize=None)
def canonical_evaluator() -> DielectricEvaluator:
    return DielectricEvaluator.from_profile(canonical_profile())


@lru_cache(maxsize=None)
def vacuum_evaluator(m0: float = 1.0) -> DielectricEvaluator:
    return DielectricEvaluator.from_profile(vacuum_profile(m0))


@lru_cache(maxsize=None)
def fine_curve(which: str):
    ev = canonical_evaluator() if which == "canonical" else vacuum_evaluator()
    return dispersion_curve(ev, np.linspace(0.0, 7.0, 701))


def _timed(number, title, fn, runtime_limit=None):
    t0 = time.perf_counter()
    res = CriterionResult(number, title, runtime_limit=runtime_limit)
    try:
        res.checks = fn()
    except Exception as exc:  # reported as a failed criterion
        res.error = f"{type(exc).__name__}: {exc}"
    res.runtime = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- criteria

def criterion_1(seed: int = 0) -> CriterionResult:
    def run():
        ev = vacuum_evaluator(1.0)
        nu_err = g_err = r_err = 0.0
        for k in (0.0, 0.5, 1.0, 2.0):
            g = solve_mode_green(ev, k, 20.0, 1e-3)
            nu = math.sqrt(1.0 + k * k)
            nu_err = max(nu_err, abs(g.nu - nu))
            g_err = max(g_err, float(np.max(np.abs(g.G - np.sin(nu * g.times) / nu))))
            r_err = max(r_err, float(np.max(np.abs(g.regular))))
        return [Check("nu_error", nu_err, "<", 1e-10),
                Check("green_error", g_err, "<", 1e-6),
                Check("regular_part_sup", r_err, "<", 1e-6)]
    return _timed(1, "vacuum oracle", run, runtime_limit=10.0)


def criterion_2(seed: int = 0) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        prof = canonical_profile()
        ev = canonical_evaluator()
        worst = 0.0
        for _ in range(10):
            lam = complex(rng.uniform(0.1, 2.0), rng.uniform(-3.0, 3.0))
            k = rng.uniform(0.1, 5.0)
            a = ev.eval_M(lam, k)
            b = dielectric_3d(prof, lam, k)
            worst = max(worst, abs(a - b) / abs(b))
        return [Check("max_relative_error", worst, "<", 1e-6)]
    return _timed(2, "reduced symbol vs 3D velocity quadrature", run, runtime_limit=60.0)


def criterion_3(seed: int = 0) -> CriterionResult:
    def run():
        ev = canonical_evaluator()
        k = np.round(np.arange(0.0, 5.0 + 1e-9, 0.05), 12)
        c = dispersion_curve(ev, k, check=False)
        pos = k > 0
        ratio = c.nu[pos] / k[pos]
        return [Check("min_nu_minus_k", float(np.min(c.nu - k)), ">", 0.0),
                Check("min_nu_prime", float(np.min(c.nu_prime)), ">=", 0.0),
                Check("min_interior_nu_second", float(np.min(c.nu_second[1:-1])), ">", 0.0),
                Check("max_increment_nu_over_k", float(np.max(np.diff(ratio))), "<", 0.0),
                Check("max_abs_M_at_root", float(np.max(curve_residuals(ev, c))), "<", 1e-10)]
    return _timed(3, "Langmuir curve properties", run, runtime_limit=120.0)


def criterion_4(seed: int = 0) -> CriterionResult:
    def run():
        ev = canonical_evaluator()
        rep = penrose_scan(ev, np.linspace(5.0 / 81, 5.0, 81), np.linspace(-1.0, 1.0, 81),
                           raise_on_violation=False)
        return [Check("penrose_constant", rep.c, ">", 0.0)]
    return _timed(4, "Penrose-type lower bound", run, runtime_limit=120.0)


def criterion_5(seed: int = 0) -> CriterionResult:
    def run():
        ev = canonical_evaluator()
        cases = {
            "f0": InitialData(bump_marginal(4, 1.0), 1.0),
            "phi0": InitialData(phi0=1.0),
            "phi1": InitialData(phi1=1.0),
        }
        checks = []
        for k in (0.5, 1.0, 2.0):
            g = solve_mode_green(ev, k, 50.0, 0.02)
            for name, data in cases.items():
                a = evolve_green_path(g, data)
                b = kinetic_mode_oracle(ev, data, k, 50.0, 0.01, 1024)
                b = SampledSeries(b.times[::2], b.values[::2])
                checks.append(Check(f"k={k:g},{name}", relative_sup_difference(a, b), "<", 1e-4))
        return checks
    return _timed(5, "Green path vs kinetic oracle", run, runtime_limit=300.0)


def criterion_6(seed: int = 0) -> CriterionResult:
    def run():
        ev = canonical_evaluator()
        checks = []
        for k in (0.5, 1.0, 2.0):
            g = solve_mode_green(ev, k, 100.0, 0.02)
            ids = g.split_identities()
            spec_d0 = float(regular_part_spectral(ev, k, [0.0], derivative=True)[0])
            expect = 1.0 - (1j * g.nu * (g.a_plus - g.a_minus)).real
            checks += [Check(f"k={k:g},value_identity", ids["value"], "<", 1e-6),
                       Check(f"k={k:g},derivative_identity", ids["derivative"], "<", 1e-6),
                       Check(f"k={k:g},spectral_derivative_at_0", abs(spec_d0 - expect), "<", 1e-6)]
            if k == 1.0:
                fit = fit_power_law(g.times, tail_envelope(g.regular), (10.0, 100.0))
                checks.append(Check("k=1,regular_decay_exponent", fit.exponent, ">=", 2.0))
        return checks
    return _timed(6, "oscillatory/regular split", run, runtime_limit=120.0)


def criterion_7(seed: int = 0) -> CriterionResult:
    def run():
        ts = np.geomspace(10.0, 200.0, 12)
        vac = field_decay_experiment(fine_curve("vacuum"), ts)
        can = field_decay_experiment(fine_curve("canonical"), ts, ev=canonical_evaluator())
        return [Check("vacuum_oscillatory_exponent", vac.fit_oscillatory.exponent, "in", (1.3, 1.7)),
                Check("canonical_oscillatory_exponent", can.fit_oscillatory.exponent, "in", (1.3, 1.7)),
                Check("canonical_regular_exponent", can.fit_regular.exponent, ">=", 2.5)]
    return _timed(7, "3D dispersive decay", run, runtime_limit=600.0)


def criterion_8(seed: int = 0) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)
        curve = fine_curve("canonical")
        worst = 0.0
        for _ in range(100):
            kv = rng.normal(size=3)
            kv *= rng.uniform(0.1, 3.0) / np.linalg.norm(kv)
            mode = Mode(kv, float(curve.nu_at(np.linalg.norm(kv))), int(rng.choice([-1, 1])),
                        rng.normal(size=3) + 1j * rng.normal(size=3))
            worst = max(worst, osc_integral_identity(mode, rng.normal(size=3), rng.normal(size=3),
                                                     float(rng.uniform(1.0, 50.0))))
        k1 = np.array([0.7, 0.0, 0.0])
        single = SyntheticField([Mode(k1, float(curve.nu_at(0.7)), 1, -1j * k1 * 0.05,
                                      PowerLawEnvelope(1.0, 0.0))])
        dec = velocity_decomposition_check(single, [0.0, 0.0, 0.0], [0.3, 0.1, 0.0], 50.0, 0.02)
        fld = random_mode_field(curve.nu_at, 3, rng, eps=0.05, envelope_exponent=1.5, regular_eps=0.05)
        dec_rand = velocity_decomposition_check(fld, [0.0, 0.0, 0.0], rng.normal(size=3) * 0.5, 100.0, 0.05)
        dec2 = velocity_decomposition_check(reference_decay_field(curve.nu_at), [0.0, 0.0, 0.0],
                                            [0.3, 0.1, 0.0], 500.0, 0.05)
        f_osc, f_tr = dec2.fit((10.0, 100.0))
        return [Check("osc_identity_max_error", worst, "<", 1e-8),
                Check("decomposition_residual_single_mode", dec.max_residual, "<", 1e-6),
                Check("decomposition_residual_random_field", dec_rand.max_residual, "<", 1e-6),
                Check("decomposition_residual_reference_field", dec2.max_residual, "<", 1e-6),
                Check("V_osc_exponent", f_osc.exponent, "in", (1.2, 1.8)),
                Check("V_tr_exponent", f_tr.exponent, "in", (1.7, 2.3))]
    return _timed(8, "characteristics decomposition", run, runtime_limit=300.0)


def criterion_9(seed: int = 0) -> CriterionResult:
    def run():
        rng = np.random.default_rng(seed)

        def nu(q):
            return math.sqrt(1.0 + q * q)

        worst = 0.0
        for _ in range(100):
            k = rng.normal(size=3)
            ell = rng.normal(size=3)
            v = rng.normal(size=3)
            worst = max(worst, resonance_symbol_identity(nu, k, ell, v / math.sqrt(1.0 + v @ v)))
        ell = np.array([0.6, -0.3, 0.8])
        v = np.array([0.4, 0.2, -0.5])
        vh = v / math.sqrt(1.0 + v @ v)
        direction = np.array([1.0, 2.0, -1.0]) / math.sqrt(6.0)
        ks = np.geomspace(1e-4, 1e-2, 9)
        rem = [np.linalg.norm(resonance_terms(nu, kk * direction, ell, vh)[2]) for kk in ks]
        slope = float(np.polyfit(np.log(ks), np.log(rem), 1)[0])
        return [Check("identity_max_error", worst, "<", 1e-10),
                Check("remainder_slope", slope, "in", (0.9, 1.1))]
    return _timed(9, "phase resonance identity", run, runtime_limit=60.0)


def criterion_10(seed: int = 0) -> CriterionResult:
    def run():
        base = run_experiment(SimConfig(nx=256, nv=256, dt=1e-2, t_end=20.0, diag_every=10))
        coarse = run_experiment(SimConfig(nx=128, nv=128, dt=2e-2, t_end=20.0, diag_every=5))
        l2 = base.series("l2")
        small = SimConfig(nx=128, nv=128, dt=1e-2, t_end=4.0, amplitude=1e-4, diag_every=100)
        lin_err = _linear_match(small)
        return [Check("mass_drift", base.mass_drift, "<", 1e-8),
                Check("energy_drift", base.energy_drift, "<", 1e-3),
                Check("l2_max_increase_relative", float(np.max(np.diff(l2)) / l2[0]), "<=", 1e-14),
                Check("energy_drift_reduction", coarse.energy_drift / base.energy_drift, ">=", 4.0),
                Check("linear_match_one_period", lin_err, "<", 1e-2)]
    return _timed(10, "1D nonlinear conservation and linear limit", run, runtime_limit=600.0)


def _linear_match(cfg: SimConfig) -> float:
    prof = canonical_profile(cfg.m0, cfg.n_ions, dim=1)
    ev = DielectricEvaluator(marginal_kernel(prof), cfg.m0, kappa0_sq(prof))
    period = 2.0 * math.pi / solve_nu_star(ev, cfg.k1).nu
    if period > cfg.t_end:
        raise ValueError("run shorter than one period")
    rep = run_experiment(cfg, record_mode_every_step=True)
    g = solve_mode_green(ev, cfg.k1, cfg.t_end, cfg.dt)
    um = prof.u_max

    def sigma(u):
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) < um
        uu = np.where(inside, u * u, 0.0)
        a = 1.0 / np.sqrt(1.0 - uu)
        return np.where(inside, 0.5 * cfg.amplitude * prof.phi(a) * a ** 3, 0.0)

    lin = evolve_green_path(g, InitialData(sigma, um)).values
    n = int(round(period / cfg.dt)) + 1
    return float(np.max(np.abs(rep.mode_series[:n] - lin[:n])) / np.max(np.abs(lin[:n])))


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


def run_criteria(numbers=None, seed: int = 0, log=None):
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    out = []
    for n in numbers:
        if n not in CRITERIA:
            raise ValueError(f"unknown criterion {n}")
        res = CRITERIA[n](seed)
        if log:
            log(res.summary_line())
        out.append(res)
    return out


def result_rows(results):
    rows = []
    for r in results:
        if r.error:
            rows.append([r.number, "error", float("nan"), "no error", False])
        for c in r.checks:
            rows.append([r.number, c.name, c.value, c.threshold_text(), c.passed])
    return rows
