"""Dielectric symbol M(lam, k), the Langmuir branch nu*(k) and the Penrose scan.

With the marginal kernel kappa(u) the symbol is

    M(lam, k) = lam^2 + |k|^2 + m0^2 + H(i lam / |k|),
    H(z) = int u kappa(u) / (z - u) du,

and on the imaginary axis lam = i tau, tau > |k|, it reduces to the real
function Psi(tau^2) with Psi(x) = -x + |k|^2 + psi(|k|^2 / x) and
psi(y) = m0^2 + y int u^2 kappa(u) / (1 - u^2 y) du.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .equilibria import EquilibriumProfile, MarginalKernel, kappa0_sq, marginal_kernel
from .numerics import (QuadratureSpec, adaptive_quad, find_root_bracketed,
                       gauss_legendre_panels, pv_integral)

_QSPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=4000)


class OnCriticalSegmentError(ValueError):
    """lam lies on the segment i[-|k| u_max, |k| u_max] where M is not defined."""


class DispersionAssertionError(AssertionError):
    """A structural property of the Langmuir branch failed on the grid."""


class PenroseViolation(AssertionError):
    """The boundary symbol comes too close to zero."""


class DielectricEvaluator:
    """Evaluates M, its boundary values and the reduced function Psi for one kernel."""

    def __init__(self, kernel: MarginalKernel, m0: float, kappa0_sq_value: float | None = None,
                 n_panels: int = 256):
        self.kernel = kernel
        self.m0 = float(m0)
        self.u_max = kernel.u_max
        x, w, k = kernel.nodes(n_panels, 16)
        self._u, self._w, self._k = x, w, k
        self.kappa0_sq = float(np.sum(w * k)) if kappa0_sq_value is None else float(kappa0_sq_value)
        if self.m0 ** 2 < self.kappa0_sq:
            raise ValueError(f"m0^2 = {self.m0 ** 2} is below kappa0^2 = {self.kappa0_sq}")
        self.tau0_sq = self.m0 ** 2 - self.kappa0_sq
        self.m1_sq = float(self.psi(1.0))

    @classmethod
    def from_profile(cls, profile: EquilibriumProfile, n_grid: int = 801) -> "DielectricEvaluator":
        kern = marginal_kernel(profile, n_grid)
        return cls(kern, profile.m0, kappa0_sq(profile))

    # ------------------------------------------------------------ symbol
    def H(self, z: complex) -> complex:
        """int u kappa(u) / (z - u) du for z off the segment [-u_max, u_max]."""
        if self.kernel.is_zero:
            return 0j
        return complex(adaptive_quad(lambda u: u * self.kernel(u) / (z - u),
                                     -self.u_max, self.u_max, _QSPEC))

    def eval_M(self, lam: complex, k: float) -> complex:
        lam = complex(lam)
        k = abs(float(k))
        if lam.real < 0:
            raise ValueError("M is defined here for Re lam >= 0")
        base = lam * lam + k * k + self.m0 ** 2
        if k == 0.0:
            return base
        if lam.real == 0.0 and abs(lam.imag) <= k * self.u_max:
            raise OnCriticalSegmentError(
                f"lam = {lam} lies on the critical segment |Im lam| <= {k * self.u_max:.6g}")
        return base + self.H(1j * lam / k)

    def pv_part(self, tau: float) -> float:
        """P.V. int kappa(u) / (tau + u) du."""
        if self.kernel.is_zero:
            return 0.0
        if abs(tau) < self.u_max:
            return float(pv_integral(self.kernel, -tau, -self.u_max, self.u_max, _QSPEC))
        return float(adaptive_quad(lambda u: self.kernel(u) / (tau + u), -self.u_max, self.u_max, _QSPEC))

    def eval_M_boundary(self, tau: float, k: float) -> complex:
        """Boundary value of M at lam = i |k| tau from Re lam > 0, |tau| <= 1."""
        tau = float(tau)
        if abs(tau) > 1.0:
            raise ValueError("boundary parameter must satisfy |tau| <= 1")
        k = abs(float(k))
        kap = float(self.kernel(np.array([tau]))[0])
        re = k * k * (1.0 - tau * tau) + self.tau0_sq + tau * self.pv_part(tau)
        return complex(re, math.pi * tau * kap)

    def pv_part_batch(self, tau) -> np.ndarray:
        """Vectorized P.V. integral on a fixed Gauss-Legendre grid (singularity subtracted)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.kernel.is_zero:
            return np.zeros_like(tau)
        u, w, ku = self._u, self._w, self._k
        out = np.empty_like(tau)
        um = self.u_max
        for i, t in enumerate(tau):
            c = -t
            if abs(c) < um:
                kc = float(self.kernel(np.array([c]))[0])
                d = u - c
                near = np.abs(d) < 1e-7
                q = np.where(near, self.kernel.derivative(0.5 * (u + c)),
                             (ku - kc) / np.where(near, 1.0, d))
                out[i] = np.sum(w * q) + kc * math.log((um - c) / (c + um))
            else:
                out[i] = np.sum(w * ku / (t + u))
        return out

    def boundary_batch(self, tau, k) -> np.ndarray:
        """M on the boundary for arrays tau (axis 1) and k (axis 0)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        k = np.atleast_1d(np.asarray(k, dtype=float))
        pv = self.pv_part_batch(tau)
        kap = self.kernel(tau)
        re = (k[:, None] ** 2) * (1.0 - tau[None, :] ** 2) + self.tau0_sq + (tau * pv)[None, :]
        return re + 1j * (math.pi * tau * kap)[None, :]

    # -------------------------------------------------- reduced functions
    def _moments(self, y, p: int, q: int):
        """int u^p kappa / (1 - u^2 y)^q du on the fixed grid."""
        u, w, ku = self._u, self._w, self._k
        return float(np.sum(w * ku * u ** p / (1.0 - u * u * y) ** q))

    def psi(self, y: float) -> float:
        if not 0.0 <= y <= 1.0:
            raise ValueError("psi is evaluated for 0 <= y <= 1")
        return self.m0 ** 2 + y * self._moments(y, 2, 1)

    def psi_prime(self, y: float) -> float:
        return self._moments(y, 2, 1) + y * self._moments(y, 4, 2)

    def psi_second(self, y: float) -> float:
        return 2.0 * self._moments(y, 4, 2) + 2.0 * y * self._moments(y, 6, 3)

    def eval_Psi(self, x: float, k: float) -> float:
        k2 = float(k) ** 2
        if not x > k2:
            raise ValueError("Psi(x) requires x > |k|^2")
        return -x + k2 + self.psi(k2 / x)

    def eval_Psi_prime(self, x: float, k: float) -> float:
        k2 = float(k) ** 2
        return -1.0 - (k2 / (x * x)) * self.psi_prime(k2 / x)


@dataclass(frozen=True)
class LangmuirRoot:
    k: float
    nu: float
    x: float
    a_plus: complex
    a_minus: complex
    psi_prime_at_root: float


def solve_nu_star(ev: DielectricEvaluator, k: float, tol: float = 1e-13) -> LangmuirRoot:
    """Unique root of Psi on [k^2 + m0^2, k^2 + m1^2] and the residues at lam = +-i nu."""
    k = abs(float(k))
    k2 = k * k
    lo = k2 + ev.m0 ** 2 * (1.0 - 1e-12)
    hi = k2 + ev.m1_sq + 1e-12
    if k == 0.0 or ev.kernel.is_zero:
        x = k2 + ev.m0 ** 2
    else:
        x = find_root_bracketed(lambda s: ev.eval_Psi(s, k), lo, hi, tol * max(1.0, hi))
    nu = math.sqrt(x)
    dpsi = ev.eval_Psi_prime(x, k)
    # M(i tau) = Psi(tau^2) so dM/dlam = -2 i tau Psi'(tau^2)
    a_plus = 1j / (2.0 * nu * dpsi)
    return LangmuirRoot(k, nu, x, a_plus, a_plus.conjugate(), dpsi)


def residue_numeric(ev: DielectricEvaluator, root: LangmuirRoot, h: float = 1e-5) -> complex:
    """1 / dM/dlam at lam = i nu from a centred difference along the imaginary direction."""
    lam = 1j * root.nu
    dM = (ev.eval_M(lam + 1j * h, root.k) - ev.eval_M(lam - 1j * h, root.k)) / (2j * h)
    return 1.0 / dM


def _x_derivatives(ev: DielectricEvaluator, k: float, x: float):
    """dx/dK and d2x/dK2 along Psi(x; K) = 0 with K = k^2."""
    K = k * k
    y = K / x
    p1 = ev.psi_prime(y)
    p2 = ev.psi_second(y)
    F_K = 1.0 + p1 / x
    F_x = -1.0 - K * p1 / x ** 2
    F_KK = p2 / x ** 2
    F_Kx = -p1 / x ** 2 - K * p2 / x ** 3
    F_xx = 2.0 * K * p1 / x ** 3 + K * K * p2 / x ** 4
    x1 = -F_K / F_x
    x2 = -(F_KK + 2.0 * F_Kx * x1 + F_xx * x1 * x1) / F_x
    return x1, x2


@dataclass
class DispersionCurve:
    k_grid: np.ndarray
    nu: np.ndarray
    nu_prime: np.ndarray
    nu_second: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    m0: float
    tau0_sq: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._nu_spline = CubicSpline(self.k_grid, self.nu)
        self._a_spline = CubicSpline(self.k_grid, self.a_plus.imag)

    def nu_at(self, k):
        k = np.abs(np.asarray(k, dtype=float))
        if np.any(k > self.k_grid[-1] * (1 + 1e-12)):
            raise ValueError("k outside the tabulated range")
        return self._nu_spline(k)

    def a_plus_at(self, k):
        return 1j * self._a_spline(np.abs(np.asarray(k, dtype=float)))

    def behaviour_constants(self) -> dict:
        """Empirical constants of the Klein-Gordon-type bounds on the grid."""
        k, nu = self.k_grid, self.nu
        w = np.sqrt(1.0 + k * k)
        interior = slice(1, -1) if k.size > 2 else slice(None)
        return {
            "nu_minus_k_over_inv_bracket_min": float(np.min((nu - k) * w)),
            "nu_over_bracket_max": float(np.max(nu / w)),
            "nu_over_bracket_min": float(np.min(nu / w)),
            "nu_prime_max": float(np.max(self.nu_prime)),
            "convexity_c0": float(np.min((self.nu_second * w ** 3)[interior])),
            "residue_times_nu_max": float(np.max(np.abs(self.a_plus) * nu)),
        }


def langmuir_point(ev: DielectricEvaluator, k: float):
    """(nu*, nu*', nu*'', a+) at one |k|; derivatives from x* = nu*^2 as a function of k^2."""
    k = abs(float(k))
    root = solve_nu_star(ev, k)
    x1, x2 = _x_derivatives(ev, k, root.x)
    d1 = k * x1 / root.nu
    d2 = x1 / root.nu + 2.0 * k * k * x2 / root.nu - k * x1 * d1 / root.nu ** 2
    return root.nu, d1, d2, root.a_plus


def dispersion_curve(ev: DielectricEvaluator, k_grid, check: bool = True) -> DispersionCurve:
    """Langmuir branch on an increasing grid of |k| >= 0 with analytic derivatives."""
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim != 1 or k_grid.size < 2 or np.any(np.diff(k_grid) <= 0) or k_grid[0] < 0:
        raise ValueError("k_grid must be increasing and non-negative")
    pts = [langmuir_point(ev, k) for k in k_grid]
    nu, d1, d2 = (np.array([p[i] for p in pts]) for i in range(3))
    ap = np.array([p[3] for p in pts], dtype=complex)
    curve = DispersionCurve(k_grid, nu, d1, d2, ap, ap.conj(), ev.m0, ev.tau0_sq)
    if check:
        check_curve(curve)
    return curve


def check_curve(curve: DispersionCurve, tol: float = 1e-12) -> None:
    k, nu = curve.k_grid, curve.nu
    bad = np.nonzero(nu <= k)[0]
    if bad.size:
        raise DispersionAssertionError(f"nu* <= |k| at k = {k[bad[0]]}")
    bad = np.nonzero(curve.nu_prime < -tol)[0]
    if bad.size:
        raise DispersionAssertionError(f"nu*' < 0 at k = {k[bad[0]]}")
    inner = curve.nu_second[1:-1]
    bad = np.nonzero(inner <= 0)[0]
    if bad.size:
        raise DispersionAssertionError(f"nu*'' <= 0 at k = {k[1 + bad[0]]}")
    pos = k > 0
    ratio = nu[pos] / k[pos]
    bad = np.nonzero(np.diff(ratio) >= 0)[0]
    if bad.size:
        raise DispersionAssertionError(f"nu*/k not decreasing near k = {k[pos][bad[0]]}")


def curve_residuals(ev: DielectricEvaluator, curve: DispersionCurve) -> np.ndarray:
    """|M(i nu*, k)| on the grid, evaluated through H rather than Psi."""
    return np.array([abs(ev.eval_M(1j * n, k)) for k, n in zip(curve.k_grid, curve.nu)])


@dataclass
class PenroseReport:
    c: float
    k_at_min: float
    tau_at_min: float
    k_grid: np.ndarray
    tau_grid: np.ndarray
    ratio: np.ndarray


def penrose_scan(ev: DielectricEvaluator, k_grid, tau_grid, raise_on_violation: bool = True) -> PenroseReport:
    """min |M_b| / (tau0^2 + |tau| + k^2 (1 - tau^2)) over the grid."""
    k_grid = np.asarray(k_grid, dtype=float)
    tau_grid = np.asarray(tau_grid, dtype=float)
    Mb = ev.boundary_batch(tau_grid, k_grid)
    denom = ev.tau0_sq + np.abs(tau_grid)[None, :] + (k_grid[:, None] ** 2) * (1.0 - tau_grid[None, :] ** 2)
    ratio = np.abs(Mb) / denom
    i, j = np.unravel_index(np.argmin(ratio), ratio.shape)
    rep = PenroseReport(float(ratio[i, j]), float(k_grid[i]), float(tau_grid[j]), k_grid, tau_grid, ratio)
    if raise_on_violation and not rep.c > 0:
        raise PenroseViolation(f"|M_b| vanishes at k = {rep.k_at_min}, tau = {rep.tau_at_min}")
    return rep


def bohm_gross_compare(ev: DielectricEvaluator, curve: DispersionCurve, n_ions: float, e0: float) -> dict:
    """nu*(k)^2 next to the classical small-k expansions."""
    k = curve.k_grid
    slope = 1.0 + ev.psi_prime(0.0) / ev.m0 ** 2
    return {
        "k": k,
        "nu_sq": curve.nu ** 2,
        "classical": n_ions + 5.0 / 3.0 * e0 * k * k,
        "shifted": ev.tau0_sq + 5.0 / 3.0 * e0 * k * k,
        "exact_small_k": ev.m0 ** 2 + slope * k * k,
    }


# -------------------------------------------------------- resonance algebra

def _nu_of(nu_star, q):
    if hasattr(nu_star, "nu_at"):
        return float(nu_star.nu_at(q))
    return float(nu_star(q))


def resonance_terms(nu_star, k, ell, v_hat):
    """Pieces of the phase-resonance identity for wave vectors k, ell and velocity v_hat."""
    k = np.asarray(k, dtype=float)
    ell = np.asarray(ell, dtype=float)
    v_hat = np.asarray(v_hat, dtype=float)
    km = k - ell
    nu_l = _nu_of(nu_star, np.linalg.norm(ell))
    nu_kl = _nu_of(nu_star, np.linalg.norm(km))
    w_plus = 1j * nu_l + 1j * np.dot(ell, v_hat)
    w_minus = -1j * nu_kl + 1j * np.dot(km, v_hat)
    lam_sum = -1j * nu_kl + 1j * nu_l + 1j * np.dot(k, v_hat)
    lhs = km * w_plus ** 2 + ell * w_minus ** 2
    rhs = k * w_plus ** 2 + ell * (w_minus - w_plus) * lam_sum
    remainder = lhs - ell * (w_minus - w_plus) * (-1j * nu_kl + 1j * nu_l)
    return lhs, rhs, remainder


def resonance_symbol_identity(nu_star, k, ell, v_hat) -> float:
    """|lhs - rhs| of the exact algebraic identity (should vanish to rounding)."""
    lhs, rhs, _ = resonance_terms(nu_star, k, ell, v_hat)
    return float(np.max(np.abs(lhs - rhs)))
