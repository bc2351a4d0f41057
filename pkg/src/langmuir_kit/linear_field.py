"""Linearized field for one Fourier mode: Green-function path, kinetic oracle, split.

Initial data for a mode are the u-marginal sigma(u) of the perturbation g_k
together with phi(0) and phi'(0). The free-streaming density is
rho0(t) = int exp(-i |k| t u) sigma(u) du.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dispersion import DielectricEvaluator, DispersionCurve
from .greenfn import (ModeGreenFunction, _chunked, physical_green_synthesis,
                      physical_regular_synthesis)
from .numerics import (PowerLawFit, SampledSeries, causal_convolution, fit_power_law,
                       gauss_legendre_panels, tail_envelope)


class GridMismatchError(ValueError):
    """Series on incompatible time grids were combined."""


class CFLViolation(ValueError):
    """Time step too large for the explicit kinetic integrator."""


@dataclass
class InitialData:
    sigma: Callable[[np.ndarray], np.ndarray] | None = None
    u_support: float = 1.0
    phi0: complex = 0.0
    phi1: complex = 0.0

    def __post_init__(self):
        if not 0.0 < self.u_support <= 1.0:
            raise ValueError("u_support must lie in (0, 1]")


def bump_marginal(power: int = 4, amplitude: float = 1.0, u_support: float = 1.0):
    """sigma(u) = amplitude (1 - (u/s)^2)^power on |u| < s."""
    def sigma(u):
        x = np.asarray(u, dtype=float) / u_support
        return np.where(np.abs(x) < 1.0, amplitude * (1.0 - x * x) ** power, 0.0)
    return sigma


def free_density(data: InitialData, k: float, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if data.sigma is None:
        return np.zeros(t.size, dtype=complex)
    k = abs(float(k))
    s = data.u_support
    n_panels = int(math.ceil(k * s * float(np.max(np.abs(t))) / 2.0)) + 16
    u, w = gauss_legendre_panels(-s, s, n_panels, 16)
    ws = w * data.sigma(u)
    out = np.empty(t.size, dtype=complex)
    for sl in _chunked(t.size, max(1, 4_000_000 // u.size)):
        out[sl] = np.exp(-1j * k * np.outer(t[sl], u)) @ ws
    return out


def _check_grid(green: ModeGreenFunction, t_grid):
    if t_grid is None:
        return green.times
    t_grid = np.asarray(t_grid, dtype=float)
    n = t_grid.size
    if n > green.times.size or not np.allclose(t_grid, green.times[:n], rtol=0, atol=1e-12):
        raise GridMismatchError("t_grid must be a prefix of the Green function grid")
    return t_grid


def evolve_green_path(green: ModeGreenFunction, data: InitialData, t_grid=None) -> SampledSeries:
    """phi(t) = G'(t) phi0 + G(t) phi1 - (G * rho0)(t)."""
    t = _check_grid(green, t_grid)
    n = t.size
    rho0 = free_density(data, green.k, t)
    conv = causal_convolution(green.G[:n].astype(complex), rho0, green.dt)
    phi = green.dG[:n] * data.phi0 + green.G[:n] * data.phi1 - conv
    return SampledSeries(t, phi, meta={"k": green.k, "route": "green"})


@dataclass
class FieldDecomposition:
    times: np.ndarray
    total: np.ndarray
    oscillatory: np.ndarray
    regular: np.ndarray


def decompose_field(green: ModeGreenFunction, data: InitialData, t_grid=None) -> FieldDecomposition:
    """Split phi into the Langmuir-residue part and the remainder."""
    t = _check_grid(green, t_grid)
    total = evolve_green_path(green, data, t).values
    rho0 = free_density(data, green.k, t)
    osc = np.zeros(t.size, dtype=complex)
    for a, lam in ((green.a_plus, 1j * green.nu), (green.a_minus, -1j * green.nu)):
        e = np.exp(lam * t)
        osc += a * (e * (lam * data.phi0 + data.phi1)
                    - causal_convolution(e, rho0, green.dt))
    return FieldDecomposition(t, total, osc, total - osc)


def kinetic_mode_oracle(ev: DielectricEvaluator, data: InitialData, k: float, t_max: float,
                        dt: float, n_u: int = 1024) -> SampledSeries:
    """Integrate the u-marginal linear kinetic system with RK4.

    dh/dt = -i|k| u h - i|k| u kappa(u) phi,  phi'' + (k^2 + m0^2) phi = -(rho0 + int h du),
    h(0) = 0, solved for q = exp(i|k|ut) h so the free streaming is exact.
    """
    k = abs(float(k))
    if n_u < 512:
        raise ValueError("n_u must be at least 512")
    omega_sq = k * k + ev.m0 ** 2
    nu_bound = math.sqrt(k * k + ev.m1_sq)
    if dt * (nu_bound + k * ev.u_max) > 0.5:
        raise CFLViolation(f"dt = {dt} too large: need dt*(nu + |k|u_max) <= 0.5")
    n_steps = int(round(t_max / dt))
    if abs(n_steps * dt - t_max) > 1e-9 * t_max:
        raise ValueError("t_max must be an integer multiple of dt")
    u, w = gauss_legendre_panels(-ev.u_max, ev.u_max, n_u // 16, 16)
    ukap = -1j * k * u * ev.kernel(u)
    half_times = 0.5 * dt * np.arange(2 * n_steps + 1)
    rho_half = free_density(data, k, half_times)

    def rhs(t, rho0, q, phi, dphi):
        ph = np.exp(1j * k * u * t)
        dq = ph * ukap * phi
        rho_h = np.dot(w, q / ph)
        return dq, dphi, -omega_sq * phi - rho0 - rho_h

    q = np.zeros(u.size, dtype=complex)
    phi = complex(data.phi0)
    dphi = complex(data.phi1)
    out = np.empty(n_steps + 1, dtype=complex)
    out[0] = phi
    for n in range(n_steps):
        t = n * dt
        r0, r1, r2 = rho_half[2 * n], rho_half[2 * n + 1], rho_half[2 * n + 2]
        k1 = rhs(t, r0, q, phi, dphi)
        k2 = rhs(t + 0.5 * dt, r1, q + 0.5 * dt * k1[0], phi + 0.5 * dt * k1[1], dphi + 0.5 * dt * k1[2])
        k3 = rhs(t + 0.5 * dt, r1, q + 0.5 * dt * k2[0], phi + 0.5 * dt * k2[1], dphi + 0.5 * dt * k2[2])
        k4 = rhs(t + dt, r2, q + dt * k3[0], phi + dt * k3[1], dphi + dt * k3[2])
        q = q + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        phi = phi + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        dphi = dphi + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        out[n + 1] = phi
    return SampledSeries(dt * np.arange(n_steps + 1), out, meta={"k": k, "route": "kinetic"})


def relative_sup_difference(a: SampledSeries, b: SampledSeries) -> float:
    """sup |a - b| / sup |b| on the common grid (b is the reference)."""
    if a.times.size != b.times.size or not np.allclose(a.times, b.times, atol=1e-12):
        raise GridMismatchError("series live on different grids")
    return float(np.max(np.abs(a.values - b.values)) / np.max(np.abs(b.values)))


# ------------------------------------------------------- 3D decay experiment

def gaussian_data(q):
    return np.exp(-np.asarray(q) ** 2)


@dataclass
class DecayReport:
    times: np.ndarray
    sup_oscillatory: np.ndarray
    sup_regular: np.ndarray | None
    fit_oscillatory: PowerLawFit
    fit_regular: PowerLawFit | None


def field_decay_experiment(curve: DispersionCurve, t_samples, data_hat=gaussian_data,
                           ev: DielectricEvaluator | None = None, q_max: float = 6.5,
                           n_r: int = 400, window=(10.0, 200.0), kind: str = "gradient") -> DecayReport:
    """sup over space of the oscillatory (and, given ev, regular) field of phi1 = F radial.

    Space is sampled at r = w t for w in [0, 0.995] plus r in [0, 5]; the
    oscillatory part combines both branches as 2 Re of the + branch.
    """
    t_samples = np.asarray(t_samples, dtype=float)
    sup_osc = np.empty(t_samples.size)
    sup_reg = np.empty(t_samples.size) if ev is not None else None
    for i, t in enumerate(t_samples):
        r = np.unique(np.concatenate([np.linspace(0.0, 0.995 * t, n_r), np.linspace(0.0, 5.0, 51)]))
        osc = 2.0 * physical_green_synthesis(curve, data_hat, t, r, 1, kind, q_max).real
        sup_osc[i] = np.max(np.abs(osc))
        if ev is not None:
            reg = physical_regular_synthesis(ev, data_hat, t, r, q_max, kind)
            sup_reg[i] = np.max(np.abs(reg))
    fit_o = fit_power_law(t_samples, sup_osc, window, min_samples=4)
    fit_r = fit_power_law(t_samples, tail_envelope(sup_reg), window, min_samples=4) if ev is not None else None
    return DecayReport(t_samples, sup_osc, sup_reg, fit_o, fit_r)
