"""Radial relativistic equilibria mu(v) = phi(<v>) and their marginal kernels.

A profile is described by a shape function phi(r) on 1 <= r <= R (r plays the
role of <v> = sqrt(1 + |v|^2)), its derivative, the field mass m0 and the
background ion density n_ions. All velocity reductions are done in the radial
variable s = |v| so they are plain one-dimensional integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import QuadratureSpec, adaptive_quad

_QSPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=2000)


class UnstableEquilibriumError(ValueError):
    """The profile violates m0^2 > kappa0^2."""


class DivergentIntegralError(ValueError):
    """An integral that must be finite for the requested quantity diverges."""


@dataclass(frozen=True)
class EquilibriumProfile:
    shape: Callable[[np.ndarray], np.ndarray]
    dshape: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    m0: float
    n_ions: float
    dim: int = 3
    scale: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        if not self.support_radius >= 1.0:
            raise ValueError("support radius R must satisfy R >= 1")
        if not self.m0 > 0:
            raise ValueError("field mass m0 must be positive")
        if not self.n_ions >= 0:
            raise ValueError("n_ions must be non-negative")
        if self.dim not in (1, 3):
            raise ValueError("dim must be 1 or 3")

    @property
    def u_max(self) -> float:
        """Largest relativistic speed |v|/<v> carried by the profile."""
        return math.sqrt(1.0 - 1.0 / self.support_radius ** 2)

    @property
    def speed_max(self) -> float:
        """Largest momentum |v| in the support."""
        return math.sqrt(self.support_radius ** 2 - 1.0)

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r >= 1.0) & (r <= self.support_radius)
        return np.where(inside, self.scale * self.shape(np.where(inside, r, 1.0)), 0.0)

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r >= 1.0) & (r <= self.support_radius)
        return np.where(inside, self.scale * self.dshape(np.where(inside, r, 1.0)), 0.0)

    def mu(self, v):
        """Equilibrium density at momenta v with trailing component axis."""
        v = np.asarray(v, dtype=float)
        return self.phi(np.sqrt(1.0 + np.sum(v * v, axis=-1)))


def _radial_moment(profile: EquilibriumProfile, fn: Callable, power: int):
    """int over |v| < sqrt(R^2-1) of fn(<v>) |v|^power with the dim-specific measure."""
    smax = profile.speed_max
    if smax == 0.0:
        return 0.0
    if profile.dim == 3:
        def integrand(s):
            return 4.0 * math.pi * fn(np.sqrt(1.0 + s * s)) * s ** (2 + power)
    else:
        def integrand(s):
            return 2.0 * fn(np.sqrt(1.0 + s * s)) * s ** power
    return float(adaptive_quad(integrand, 0.0, smax, _QSPEC))


def _raw_mass(profile: EquilibriumProfile) -> float:
    raw = replace(profile, scale=1.0)
    return _radial_moment(raw, raw.phi, 0)


def kappa0_sq(profile: EquilibriumProfile) -> float:
    """kappa0^2 = -int phi'(<v>) dv."""
    val = -_radial_moment(profile, profile.dphi, 0)
    if val < -1e-10:
        raise ValueError(f"kappa0^2 = {val:.3e} < 0 for profile {profile.name!r}")
    return max(val, 0.0)


def tau0_sq(profile: EquilibriumProfile) -> float:
    """Stability margin m0^2 - kappa0^2."""
    return profile.m0 ** 2 - kappa0_sq(profile)


def normalize(profile: EquilibriumProfile, check_stability: bool = True) -> EquilibriumProfile:
    """Rescale the shape so that int mu dv = n_ions.

    Idempotent: the scale is always recomputed from the raw shape. With
    check_stability the normalized profile must satisfy m0^2 > kappa0^2.
    """
    probe = np.linspace(1.0, profile.support_radius, 513)
    if np.any(profile.shape(probe) < 0.0):
        raise ValueError(f"profile {profile.name!r} is negative somewhere on [1, R]")
    if profile.n_ions == 0.0:
        out = replace(profile, scale=0.0)
    else:
        mass = _raw_mass(profile)
        if not mass > 0:
            raise ValueError(f"profile {profile.name!r} has non-positive mass {mass}")
        out = replace(profile, scale=profile.n_ions / mass)
    if check_stability:
        k2 = kappa0_sq(out)
        if not profile.m0 ** 2 > k2:
            raise UnstableEquilibriumError(
                f"profile {profile.name!r}: m0^2 = {profile.m0 ** 2:.6g} does not exceed "
                f"kappa0^2 = {k2:.6g}")
    return out


def density(profile: EquilibriumProfile) -> float:
    return _radial_moment(profile, profile.phi, 0)


def pressure_coefficient_e0(profile: EquilibriumProfile) -> float:
    """(1/n_ions) int |v|^2 mu dv in 3D; zero for the vacuum."""
    if profile.n_ions == 0.0:
        return 0.0
    return _radial_moment(profile, profile.phi, 2) / profile.n_ions


def survival_threshold_vp(mu_tilde: Callable, upsilon: float, spec: QuadratureSpec | None = None) -> float:
    """4 pi int_0^Y u^2 mu(u) / (Y^2 - u^2) du for a radial profile of speed u.

    Requires mu to vanish at the edge u = Y; otherwise the integrand has a
    non-integrable 1/(Y - u) singularity and DivergentIntegralError is raised.
    """
    if not upsilon > 0:
        raise ValueError("threshold speed must be positive")
    probe = np.linspace(0.0, upsilon, 201)
    peak = float(np.max(np.abs(mu_tilde(probe))))
    edge = abs(float(np.asarray(mu_tilde(np.array([upsilon * (1.0 - 1e-7)])))[0]))
    if peak > 0 and edge > 1e-5 * peak:
        raise DivergentIntegralError(
            f"mu does not vanish at u = {upsilon}: |mu| = {edge:.3e} near the edge")

    def integrand(u):
        return 4.0 * math.pi * u * u * mu_tilde(u) / (upsilon ** 2 - u * u)

    return float(adaptive_quad(integrand, 0.0, upsilon, spec or _QSPEC))


# ------------------------------------------------------------ marginal kernel

def kappa_exact(profile: EquilibriumProfile, u) -> np.ndarray:
    """kappa(u) by direct quadrature at each point (slow; used to sample the spline).

    3D: kappa(u) = 2 pi a^2 phi(a) + 4 pi int_a^R phi(s) s ds with a = 1/sqrt(1-u^2).
    1D: kappa(u) = -phi'(a) a^3.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    R = profile.support_radius
    for i, ui in enumerate(np.abs(u)):
        if ui >= profile.u_max:
            continue
        a = 1.0 / math.sqrt(1.0 - ui * ui)
        if profile.dim == 1:
            out[i] = -float(profile.dphi(np.array([a]))[0]) * a ** 3
            continue
        tail = adaptive_quad(lambda s: profile.phi(s) * s, a, R, _QSPEC) if a < R else 0.0
        out[i] = 2.0 * math.pi * a * a * float(profile.phi(np.array([a]))[0]) + 4.0 * math.pi * tail
    return out


@dataclass
class MarginalKernel:
    """Even kernel kappa(u) on [-u_max, u_max], interpolated from samples on [0, u_max]."""

    u_grid: np.ndarray
    values: np.ndarray
    u_max: float

    def __post_init__(self):
        self.u_grid = np.asarray(self.u_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.u_grid[0] != 0.0 or abs(self.u_grid[-1] - self.u_max) > 1e-15:
            raise ValueError("kernel grid must span [0, u_max]")
        self._zero = not np.any(self.values)
        if not self._zero:
            self._spline = CubicSpline(self.u_grid, self.values, bc_type=((1, 0.0), "not-a-knot"))

    @property
    def is_zero(self) -> bool:
        return self._zero

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self._zero:
            return np.zeros_like(u)
        a = np.abs(u)
        inside = a < self.u_max
        return np.where(inside, np.maximum(self._spline(np.where(inside, a, 0.0)), 0.0), 0.0)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self._zero:
            return np.zeros_like(u)
        a = np.abs(u)
        inside = a < self.u_max
        return np.where(inside, np.sign(u) * self._spline(np.where(inside, a, 0.0), 1), 0.0)

    def nodes(self, n_panels: int = 64, order: int = 16, half: bool = False):
        """Gauss-Legendre nodes, weights and kernel values on [-u_max, u_max] (or [0, u_max])."""
        from .numerics import gauss_legendre_panels
        lo = 0.0 if half else -self.u_max
        x, w = gauss_legendre_panels(lo, self.u_max, n_panels, order)
        return x, w, self(x)

    def integral(self) -> float:
        x, w, k = self.nodes(128)
        return float(np.sum(w * k))

    def moment(self, p: int) -> float:
        x, w, k = self.nodes(128)
        return float(np.sum(w * k * x ** p))


def marginal_kernel(profile: EquilibriumProfile, n_grid: int = 801) -> MarginalKernel:
    """Sample kappa on a grid clustered toward u_max and build the interpolant."""
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    um = profile.u_max
    theta = np.linspace(0.0, 0.5 * math.pi, n_grid)
    grid = um * np.sin(theta)
    grid[0], grid[-1] = 0.0, um
    if profile.scale == 0.0 or um == 0.0:
        vals = np.zeros(n_grid)
    else:
        vals = kappa_exact(profile, grid)
    return MarginalKernel(grid, vals, um)


# ---------------------------------------------------------------- builtins

def _poly_shape(R: float, p: int):
    R2 = R * R

    def shape(r):
        return (R2 - r * r) ** p

    def dshape(r):
        return -2.0 * p * r * (R2 - r * r) ** (p - 1)

    return shape, dshape


def polynomial_profile(R: float = 2.0, power: int = 4, m0: float = 2.0, n_ions: float = 0.5,
                       dim: int = 3, check_stability: bool = True, name: str | None = None):
    """phi(r) = C (R^2 - r^2)^power on [1, R], normalized to n_ions."""
    if power < 1:
        raise ValueError("power must be >= 1")
    shape, dshape = _poly_shape(R, power)
    prof = EquilibriumProfile(shape, dshape, R, m0, n_ions, dim=dim,
                              name=name or f"poly(R={R},p={power})")
    return normalize(prof, check_stability)


def canonical_profile(m0: float = 2.0, n_ions: float = 0.5, dim: int = 3) -> EquilibriumProfile:
    """C (4 - r^2)^4 on [1, 2]; the default density keeps m0 = 2 stable."""
    return polynomial_profile(2.0, 4, m0, n_ions, dim=dim, name="canonical" if dim == 3 else "canonical-1d")


def vacuum_profile(m0: float = 1.0, dim: int = 3) -> EquilibriumProfile:
    shape, dshape = _poly_shape(2.0, 4)
    return normalize(EquilibriumProfile(shape, dshape, 2.0, m0, 0.0, dim=dim, name="vacuum"))


BUILTIN_PROFILES = ("canonical", "vacuum", "polynomial")


def profile_from_config(cfg: dict) -> EquilibriumProfile:
    """Build a profile from a mapping such as {"name": "canonical", "m0": 2.0}."""
    if not isinstance(cfg, dict):
        raise ValueError("profile configuration must be a mapping")
    name = cfg.get("name", "canonical")
    dim = int(cfg.get("dim", 3))
    allowed = {"name", "m0", "n_ions", "dim", "R", "power"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown profile keys: {sorted(unknown)}")
    if name == "canonical":
        return canonical_profile(float(cfg.get("m0", 2.0)), float(cfg.get("n_ions", 0.5)), dim)
    if name == "vacuum":
        return vacuum_profile(float(cfg.get("m0", 1.0)), dim)
    if name == "polynomial":
        return polynomial_profile(float(cfg.get("R", 2.0)), int(cfg.get("power", 4)),
                                  float(cfg.get("m0", 2.0)), float(cfg.get("n_ions", 0.5)), dim)
    raise ValueError(f"unknown profile {name!r}; choose from {BUILTIN_PROFILES}")
