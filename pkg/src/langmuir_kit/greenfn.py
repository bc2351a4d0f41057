"""Per-mode resolvent G_k(t), its oscillatory/regular split and physical-space synthesis.

For a fixed wave number the Fourier-Laplace inverse of 1/M is the solution of

    G'' + (|k|^2 + m0^2) G + int_0^t N_k(t - s) G(s) ds = 0,  G(0) = 0, G'(0) = 1,

with the real memory kernel N_k(t) = -|k| int u kappa(u) sin(|k| u t) du, whose
Laplace transform is H(i lam / |k|).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import DielectricEvaluator, DispersionCurve, LangmuirRoot, solve_nu_star
from .numerics import QuadratureSpec, adaptive_quad, gauss_legendre_panels, volterra_second_order


class NumericalInstabilityError(RuntimeError):
    """The integrated Green function left its a-priori bound."""


def _chunked(n, size=512):
    for i in range(0, n, size):
        yield slice(i, min(i + size, n))


@dataclass
class MemoryKernel:
    """N_k(t) evaluated by Gauss-Legendre quadrature in u, panels sized to the phase."""

    ev: DielectricEvaluator
    k: float

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = abs(self.k)
        if k == 0.0 or self.ev.kernel.is_zero:
            return np.zeros_like(t)
        um = self.ev.u_max
        tmax = float(np.max(np.abs(t))) if t.size else 0.0
        n_panels = int(math.ceil(k * um * tmax / 2.0)) + 8
        u, w = gauss_legendre_panels(0.0, um, n_panels, 16)
        wk = w * u * self.ev.kernel(u)
        out = np.empty_like(t)
        for sl in _chunked(t.size, max(1, 4_000_000 // u.size)):
            out[sl] = np.sin(k * np.outer(t[sl], u)) @ wk
        return -2.0 * k * out

    def laplace(self, lam: complex) -> complex:
        """Numerical Laplace transform int_0^inf exp(-lam t) N(t) dt for Re lam > 0."""
        if not lam.real > 0:
            raise ValueError("numerical Laplace transform needs Re lam > 0")
        T = 40.0 / lam.real
        # split into unit pieces so each adaptive call stays well resolved
        edges = np.linspace(0.0, T, int(math.ceil(T)) + 1)
        spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-13, max_subdivisions=400)
        total = 0j
        for a, b in zip(edges[:-1], edges[1:]):
            total += adaptive_quad(lambda t: np.exp(-lam * t) * self(t), a, b, spec)
        return complex(total)


def memory_kernel(ev: DielectricEvaluator, k: float) -> MemoryKernel:
    return MemoryKernel(ev, float(k))


def check_memory_kernel_sign(ev: DielectricEvaluator, k: float, lambdas) -> float:
    """Largest relative mismatch between L[N](lam) and M(lam, k) - (lam^2 + k^2 + m0^2)."""
    N = memory_kernel(ev, k)
    worst = 0.0
    for lam in lambdas:
        lam = complex(lam)
        ref = ev.eval_M(lam, k) - (lam * lam + k * k + ev.m0 ** 2)
        got = N.laplace(lam)
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    return worst


@dataclass
class ModeGreenFunction:
    k: float
    times: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    root: LangmuirRoot

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def nu(self) -> float:
        return self.root.nu

    @property
    def a_plus(self) -> complex:
        return self.root.a_plus

    @property
    def a_minus(self) -> complex:
        return self.root.a_minus

    def oscillatory(self, t=None) -> np.ndarray:
        t = self.times if t is None else np.asarray(t, dtype=float)
        z = self.a_plus * np.exp(1j * self.nu * t) + self.a_minus * np.exp(-1j * self.nu * t)
        return z.real

    def oscillatory_derivative(self, t=None) -> np.ndarray:
        t = self.times if t is None else np.asarray(t, dtype=float)
        lp, lm = 1j * self.nu, -1j * self.nu
        z = self.a_plus * lp * np.exp(lp * t) + self.a_minus * lm * np.exp(lm * t)
        return z.real

    @property
    def regular(self) -> np.ndarray:
        return self.G - self.oscillatory()

    @property
    def regular_derivative(self) -> np.ndarray:
        return self.dG - self.oscillatory_derivative()

    def split_identities(self) -> dict:
        """Residuals of G^r(0) + a+ + a- = 0 and G^r'(0) + i nu (a+ - a-) = 1."""
        a_sum = self.a_plus + self.a_minus
        a_diff = 1j * self.nu * (self.a_plus - self.a_minus)
        return {
            "value": abs(self.regular[0] + a_sum.real + 1j * a_sum.imag),
            "derivative": abs(self.regular_derivative[0] + a_diff - 1.0),
        }


def solve_mode_green(ev: DielectricEvaluator, k: float, t_max: float, dt: float = 0.02,
                     richardson: int = 2) -> ModeGreenFunction:
    """Integrate the Volterra problem for one |k| and attach the Langmuir residues."""
    k = abs(float(k))
    omega_sq = k * k + ev.m0 ** 2
    kern = memory_kernel(ev, k)
    G, dG = volterra_second_order(omega_sq, kern, t_max, dt, richardson, with_derivative=True)
    bound = 10.0 / math.sqrt(omega_sq)
    if not np.all(np.isfinite(G.values)) or np.max(np.abs(G.values)) > bound:
        raise NumericalInstabilityError(
            f"|G| exceeded {bound:.3g} for k = {k}; reduce dt (now {dt})")
    return ModeGreenFunction(k, G.times, G.values, dG.values, solve_nu_star(ev, k))


# ------------------------------------------------------ spectral regular part

class RegularSpectrum:
    """Density tau kappa(tau)/|M_b(tau, k)|^2 on a Gauss-Legendre grid in tau."""

    def __init__(self, ev: DielectricEvaluator, n_panels: int):
        self.ev = ev
        self.tau, self.w = gauss_legendre_panels(0.0, ev.u_max, n_panels, 16)
        self.kap = ev.kernel(self.tau)
        self.pv = ev.pv_part_batch(self.tau)

    def density(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        t = self.tau
        re = (k[:, None] ** 2) * (1.0 - t * t)[None, :] + self.ev.tau0_sq + (t * self.pv)[None, :]
        im = (math.pi * t * self.kap)[None, :]
        return (t * self.kap)[None, :] / (re * re + im * im)


def regular_part_spectral(ev: DielectricEvaluator, k: float, t, derivative: bool = False) -> np.ndarray:
    """G^r_k(t) = 2|k| int_0^u_max sin(|k| t tau) tau kappa / |M_b|^2 dtau.

    Independent of the Volterra route: built from boundary values of M only.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = abs(float(k))
    if ev.kernel.is_zero or k == 0.0:
        return np.zeros_like(t)
    n_panels = int(math.ceil(k * ev.u_max * float(np.max(t)) / 2.0)) + 64
    spec = RegularSpectrum(ev, n_panels)
    dens = spec.w * spec.density(k)[0]
    out = np.empty_like(t)
    for sl in _chunked(t.size, max(1, 4_000_000 // spec.tau.size)):
        ph = k * np.outer(t[sl], spec.tau)
        if derivative:
            out[sl] = (np.cos(ph) * (k * spec.tau)) @ dens
        else:
            out[sl] = np.sin(ph) @ dens
    return 2.0 * k * out


# -------------------------------------------------- physical-space synthesis

def _radial_kernel(kind: str, q, r):
    qr = np.outer(r, q)
    small = qr < 1e-4
    qs = np.where(small, 1.0, qr)
    if kind == "potential":
        return np.where(small, 1.0 - qr * qr / 6.0, np.sin(qs) / qs)
    if kind == "gradient":
        # -d/dr sinc(qr) = q j1(qr)
        j1 = np.where(small, qr / 3.0, np.sin(qs) / qs ** 2 - np.cos(qs) / qs)
        return q[None, :] * j1
    raise ValueError(f"unknown kernel {kind!r}")


def physical_green_synthesis(curve: DispersionCurve, data_hat, t: float, r, branch: int = 1,
                             kind: str = "potential", q_max: float | None = None) -> np.ndarray:
    """(1/2 pi^2) int a(q) exp(i branch nu(q) t) F(q) K(q r) q^2 dq for radial data F.

    K is sin(qr)/(qr) for the potential and q j1(qr) for the radial field.
    Panels are sized from the phase rate t max|nu'| + max r.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    q_max = float(curve.k_grid[-1]) if q_max is None else float(q_max)
    rate = abs(t) * max(1.0, float(np.max(curve.nu_prime))) + float(np.max(r))
    n_panels = int(math.ceil(rate * q_max / 2.0)) + 16
    q, w = gauss_legendre_panels(0.0, q_max, n_panels, 16)
    a = curve.a_plus_at(q) if branch == 1 else np.conj(curve.a_plus_at(q))
    amp = w * a * np.exp(1j * branch * curve.nu_at(q) * t) * data_hat(q) * q * q
    out = np.empty(r.size, dtype=complex)
    for sl in _chunked(r.size, max(1, 4_000_000 // q.size)):
        out[sl] = _radial_kernel(kind, q, r[sl]) @ amp
    return out / (2.0 * math.pi ** 2)


def physical_regular_synthesis(ev: DielectricEvaluator, data_hat, t: float, r, q_max: float,
                               kind: str = "potential") -> np.ndarray:
    """Regular-part field (1/2 pi^2) int G^r_q(t) F(q) K(q r) q^2 dq via the spectral formula."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if ev.kernel.is_zero:
        return np.zeros(r.size)
    um = ev.u_max
    spec = RegularSpectrum(ev, int(math.ceil(q_max * um * t / 2.0)) + 64)
    rate = t * um + float(np.max(r))
    q, w = gauss_legendre_panels(0.0, q_max, int(math.ceil(rate * q_max / 2.0)) + 16, 16)
    Gr = np.empty(q.size)
    dens_w = spec.w
    for sl in _chunked(q.size, max(1, 2_000_000 // spec.tau.size)):
        dens = spec.density(q[sl]) * dens_w[None, :]
        Gr[sl] = 2.0 * q[sl] * np.sum(np.sin(np.outer(q[sl] * t, spec.tau)) * dens, axis=1)
    amp = w * Gr * data_hat(q) * q * q
    out = np.empty(r.size)
    for sl in _chunked(r.size, max(1, 4_000_000 // q.size)):
        out[sl] = _radial_kernel(kind, q, r[sl]) @ amp
    return out / (2.0 * math.pi ** 2)
