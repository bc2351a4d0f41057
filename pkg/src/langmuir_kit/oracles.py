"""Independent reference computations used to cross-check the fast paths.

These routines deliberately avoid the reduced marginal kernel and work in the
original velocity variables, so agreement with the main code is a real test.
"""
from __future__ import annotations

import math

import numpy as np

from .equilibria import EquilibriumProfile
from .numerics import QuadratureSpec, adaptive_quad

_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000)


def kappa_wplane(profile: EquilibriumProfile, u: float) -> float:
    """kappa(u) as an integral over the plane orthogonal to the u direction.

    kappa(u) = -2 pi int_0^inf phi'(<r>/sqrt(1-u^2)) <r> (1-u^2)^(-3/2) r dr,
    <r> = sqrt(1 + r^2).
    """
    if abs(u) >= profile.u_max:
        return 0.0
    g = 1.0 - u * u
    # phi' vanishes once <r>/sqrt(g) exceeds R
    rmax = math.sqrt(max(profile.support_radius ** 2 * g - 1.0, 0.0))
    if rmax == 0.0:
        return 0.0

    def integrand(r):
        br = np.sqrt(1.0 + r * r)
        return profile.dphi(br / math.sqrt(g)) * br * r

    return float(-2.0 * math.pi * g ** -1.5 * adaptive_quad(integrand, 0.0, rmax, _SPEC))


def kappa0_sq_monte_carlo(profile: EquilibriumProfile, n_samples: int, rng: np.random.Generator):
    """Monte Carlo estimate of -int phi'(<v>) dv with uniform samples in the support ball.

    Returns (estimate, standard error).
    """
    smax = profile.speed_max
    d = profile.dim
    x = rng.normal(size=(n_samples, d))
    x /= np.linalg.norm(x, axis=1)[:, None]
    rad = smax * rng.random(n_samples) ** (1.0 / d)
    v = x * rad[:, None]
    vol = (4.0 / 3.0 * math.pi * smax ** 3) if d == 3 else 2.0 * smax
    vals = -vol * profile.dphi(np.sqrt(1.0 + np.sum(v * v, axis=1)))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def dielectric_3d(profile: EquilibriumProfile, lam: complex, k: float) -> complex:
    """M(lam, k) from the velocity-space integral in spherical coordinates.

    M = lam^2 + k^2 + m0^2 + int (i k.vhat)/(lam + i k.vhat) phi'(<v>) dv, Re lam > 0.
    The polar-angle integral is done in closed form and the radial one numerically.
    """
    if not lam.real > 0:
        raise ValueError("oracle requires Re lam > 0")
    k = abs(k)
    base = lam * lam + k * k + profile.m0 ** 2
    if k == 0.0 or profile.scale == 0.0:
        return complex(base)

    def integrand(rho):
        br = np.sqrt(1.0 + rho * rho)
        beta = k * rho / br
        # int_{-1}^{1} i b c / (lam + i b c) dc = 2 - (lam / (i b)) log((lam + i b)/(lam - i b))
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = 2.0 - lam / (1j * beta) * (np.log(lam + 1j * beta) - np.log(lam - 1j * beta))
        # small beta: the series starts at (2/3)(b/lam)^2
        small = beta < 1e-6 * abs(lam)
        ang = np.where(small, 2.0 / 3.0 * (beta / lam) ** 2, ang)
        return 2.0 * math.pi * rho * rho * ang * profile.dphi(br)

    return complex(base + adaptive_quad(integrand, 0.0, profile.speed_max, _SPEC))


def dielectric_3d_bruteforce(profile: EquilibriumProfile, lam: complex, k: float,
                             n_rho: int = 400, n_c: int = 400) -> complex:
    """Same quantity with tensor Gauss-Legendre in (|v|, cos angle); no closed forms."""
    from .numerics import gauss_legendre_panels
    rho, wr = gauss_legendre_panels(0.0, profile.speed_max, n_rho // 16, 16)
    c, wc = gauss_legendre_panels(-1.0, 1.0, n_c // 16, 16)
    br = np.sqrt(1.0 + rho * rho)
    beta = (abs(k) * rho / br)[:, None] * c[None, :]
    inner = (1j * beta / (lam + 1j * beta)) @ wc
    return complex(lam * lam + k * k + profile.m0 ** 2
                   + 2.0 * math.pi * np.sum(wr * rho * rho * profile.dphi(br) * inner))


def free_density_radial(gamma, k: float, t: float, rho_max: float = 60.0) -> complex:
    """int exp(-i k.vhat t) g(v) dv for radial g(v) = gamma(<v>) via the radial variable."""
    k = abs(k)

    def integrand(rho):
        br = np.sqrt(1.0 + rho * rho)
        beta = k * t * rho / br
        sinc = np.where(beta == 0.0, 2.0, 2.0 * np.sin(beta) / np.where(beta == 0.0, 1.0, beta))
        return 2.0 * math.pi * rho * rho * gamma(br) * sinc

    return complex(adaptive_quad(integrand, 0.0, rho_max, _SPEC))
