"""Quadrature, root finding, Volterra integration and decay fitting.

Everything here is model-agnostic: the routines act on callables and sampled
series and know nothing about plasmas.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to meet its tolerance."""


class RootFindingError(RuntimeError):
    """A bracketed root search could not proceed."""


class FitError(ValueError):
    """A power-law fit was requested on unusable data."""


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 400

    def __post_init__(self):
        if not (self.abs_tol >= 0 and self.rel_tol >= 0):
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one tolerance must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass
class SampledSeries:
    """Uniformly spaced samples of a scalar function of time."""

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.ndim != 1 or self.times.shape[0] != self.values.shape[0]:
            raise ValueError("times and values must have matching length")
        if self.times.size > 1:
            d = np.diff(self.times)
            if np.any(d <= 0):
                raise ValueError("sample times must be strictly increasing")
            if np.max(np.abs(d - d[0])) > 1e-9 * max(1.0, abs(d[0])):
                raise ValueError("sample times must be uniformly spaced")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self):
        return self.times.size


# ---------------------------------------------------------------- quadrature

# 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WK15 = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes sit at odd Kronrod indices (±x1, ±x3, ±x5) and the centre
_WG15 = np.zeros(15)
for _i, _g in zip((1, 3, 5), _WG[:3]):
    _WG15[_i] = _g
    _WG15[14 - _i] = _g
_WG15[7] = _WG[3]


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = np.asarray(f(c + h * _NODES))
    k = h * (_WK15 @ y) if y.ndim == 1 else h * np.tensordot(_WK15, y, axes=(0, 0))
    g = h * (_WG15 @ y) if y.ndim == 1 else h * np.tensordot(_WG15, y, axes=(0, 0))
    return k, np.max(np.abs(k - g))


def adaptive_quad(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
                  vectorized: bool = True):
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].

    f receives an array of nodes and may return real or complex values; a
    leading node axis followed by extra axes integrates a batch at once.
    Raises QuadratureError if the tolerance is not met within
    spec.max_subdivisions interval splits.
    """
    spec = spec or QuadratureSpec()
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if a == b:
        return 0.0 * _gk15(f if vectorized else np.vectorize(f), a, a + 1.0)[0]
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    g = f if vectorized else np.vectorize(f, otypes=[complex])
    val, err = _gk15(g, a, b)
    heap = [(-err, 0, a, b, val, err)]
    total, total_err = val, err
    counter = 1
    splits = 0
    while True:
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(total))))
        if total_err <= tol:
            break
        if splits >= spec.max_subdivisions:
            raise QuadratureError(
                f"adaptive_quad on [{a}, {b}]: error estimate {total_err:.3e} "
                f"exceeds tolerance {tol:.3e} after {splits} subdivisions")
        _, _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            raise QuadratureError(f"adaptive_quad: interval [{lo}, {hi}] cannot be split further")
        v1, e1 = _gk15(g, lo, mid)
        v2, e2 = _gk15(g, mid, hi)
        total = total - v + v1 + v2
        total_err = total_err - e + e1 + e2
        heapq.heappush(heap, (-e1, counter, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, counter + 1, mid, hi, v2, e2))
        counter += 2
        splits += 1
        # rebuild the sums occasionally to avoid drift from repeated updates
        if splits % 64 == 0:
            total = sum(item[4] for item in heap)
            total_err = sum(item[5] for item in heap)
    return sign * total


def pv_integral(g: Callable, pole: float, a: float, b: float,
                spec: QuadratureSpec | None = None):
    """Cauchy principal value of int_a^b g(u)/(u - pole) du for a < pole < b.

    Singularity subtraction: the smooth remainder (g(u) - g(pole))/(u - pole)
    is integrated on each side of the pole and g(pole) log((b-pole)/(pole-a))
    is added analytically.
    """
    if not (a < pole < b):
        raise ValueError(f"pole {pole} must lie strictly inside ({a}, {b})")
    g0 = np.asarray(g(np.array([pole])))[0]
    if not np.all(np.isfinite(g0)):
        raise ValueError(f"integrand numerator is not finite at the pole {pole}")

    def rem(u):
        return (np.asarray(g(u)) - g0) / (u - pole)

    left = adaptive_quad(rem, a, pole, spec)
    right = adaptive_quad(rem, pole, b, spec)
    return left + right + g0 * math.log((b - pole) / (pole - a))


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = 16):
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    n_panels = max(int(n_panels), 1)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def oscillatory_quad(amplitude: Callable, phase: Callable, a: float, b: float,
                     max_phase_rate: float, order: int = 16, radians_per_panel: float = 2.0):
    """Integral of amplitude(x) exp(i phase(x)) over [a, b].

    Composite Gauss-Legendre whose panels are narrow enough that the phase
    advances by at most `radians_per_panel` across any panel, given the bound
    max_phase_rate >= |phase'(x)|. Amplitude and phase must be vectorized and
    smooth on the panels.
    """
    if b <= a:
        raise ValueError("require a < b")
    n_panels = int(math.ceil(abs(max_phase_rate) * (b - a) / radians_per_panel)) + 1
    x, w = gauss_legendre_panels(a, b, n_panels, order)
    return np.sum(w * np.asarray(amplitude(x)) * np.exp(1j * np.asarray(phase(x))))


# -------------------------------------------------------------- root finding

def find_root_bracketed(h: Callable[[float], float], lo: float, hi: float,
                        tol: float = 1e-13, max_iter: int = 300):
    """Root of a real function in [lo, hi] by safeguarded secant/bisection.

    Returns x with the final bracket narrower than tol (absolute) and |h(x)|
    the smaller of the two bracket ends.
    """
    if not lo < hi:
        raise RootFindingError(f"invalid bracket [{lo}, {hi}]")
    flo, fhi = float(h(lo)), float(h(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise RootFindingError(
            f"no sign change on [{lo}, {hi}]: h(lo)={flo:.6e}, h(hi)={fhi:.6e}")
    a, b, fa, fb = lo, hi, flo, fhi
    use_bisect = False
    for _ in range(max_iter):
        width = b - a
        if width < tol:
            break
        if use_bisect:
            x = 0.5 * (a + b)
        else:
            x = b - fb * (b - a) / (fb - fa)
            if not (a < x < b):
                x = 0.5 * (a + b)
        fx = float(h(x))
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(fa):
            a, fa = x, fx
        else:
            b, fb = x, fx
        # fall back to bisection whenever the bracket shrank by less than half
        use_bisect = (b - a) > 0.5 * width
        if b - a >= width:
            # interval no longer shrinks in floating point
            break
    else:
        raise RootFindingError(f"no convergence after {max_iter} iterations on [{lo}, {hi}]")
    return a if abs(fa) <= abs(fb) else b


# ------------------------------------------------------------- convolutions

def _newton_cotes_weights(n: int) -> np.ndarray:
    # closed Newton-Cotes weights on n+1 unit-spaced points
    j = np.arange(n + 1, dtype=float)
    V = np.vander(j, increasing=True).T
    moments = np.array([n ** (p + 1) / (p + 1) for p in range(n + 1)])
    return np.linalg.solve(V, moments)


_GREGORY_END = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])
_SMALL_NC = {n: _newton_cotes_weights(n) for n in range(1, 6)}


def quadrature_weights(n: int, order: int = 4) -> np.ndarray:
    """Weights (unit spacing) for integrating n+1 equispaced samples.

    order=2 is the trapezoid rule; order=4 uses Gregory end corrections
    (3/8, 7/6, 23/24, 1, ..., 1, 23/24, 7/6, 3/8) and Newton-Cotes for n<6.
    """
    if n == 0:
        return np.zeros(1)
    if order == 2:
        w = np.ones(n + 1)
        w[0] = w[-1] = 0.5
        return w
    if order != 4:
        raise ValueError("order must be 2 or 4")
    if n < 6:
        return _SMALL_NC[n].copy()
    w = np.ones(n + 1)
    w[:3] = _GREGORY_END
    w[-3:] = _GREGORY_END[::-1]
    return w


def causal_convolution(a_vals: np.ndarray, b_vals: np.ndarray, dt: float,
                       order: int = 4) -> np.ndarray:
    """c[n] = int_0^{t_n} a(t_n - s) b(s) ds from samples on a uniform grid."""
    a_vals = np.asarray(a_vals)
    b_vals = np.asarray(b_vals)
    if a_vals.shape != b_vals.shape:
        raise ValueError("convolution operands must share the grid")
    n_pts = a_vals.size
    out = np.zeros(n_pts, dtype=np.result_type(a_vals, b_vals, float))
    a_rev = a_vals[::-1]
    for n in range(1, n_pts):
        w = quadrature_weights(n, order)
        # a(t_n - s_j) for j = 0..n is a[n], a[n-1], ..., a[0]
        out[n] = dt * np.dot(w * a_rev[n_pts - 1 - n:], b_vals[:n + 1])
    return out


# ------------------------------------------------------------- Volterra ODE

def _volterra_level(omega_sq: float, kernel_vals: np.ndarray, h: float, n_steps: int):
    """Trigonometric two-step scheme for G'' + w^2 G + (N*G) = 0, G(0)=0, G'(0)=1.

    Returns G on n_steps+2 points so that a centred derivative is available
    on the first n_steps+1 points.
    """
    omega = math.sqrt(omega_sq) if omega_sq > 0 else 0.0
    wh = omega * h
    c1 = 2.0 * math.cos(wh)
    c2 = h * h * (np.sinc(wh / (2.0 * math.pi)) ** 2)
    N = kernel_vals
    G = np.zeros(n_steps + 2)
    # symmetric start: the scheme applied at n=0 with a centred derivative
    # condition; an exact G(h) here would spoil the even-power error expansion
    G[1] = math.sin(wh) / omega if omega > 0 else h
    half_n0 = 0.5 * N[0]
    if not np.any(N):
        for n in range(1, n_steps + 1):
            G[n + 1] = c1 * G[n] - G[n - 1]
    else:
        for n in range(1, n_steps + 1):
            # trapezoid: h * (sum_{j=1}^{n-1} N[n-j] G[j] + N[0] G[n] / 2); G[0] = 0
            conv = h * (np.dot(N[n - 1:0:-1], G[1:n]) + half_n0 * G[n])
            G[n + 1] = c1 * G[n] - G[n - 1] - c2 * conv
    if omega > 0:
        dfac = omega / (2.0 * math.sin(wh))
    else:
        dfac = 1.0 / (2.0 * h)
    dG = np.empty(n_steps + 1)
    dG[0] = 1.0
    dG[1:] = (G[2:n_steps + 2] - G[0:n_steps]) * dfac
    return G[:n_steps + 1], dG


def volterra_second_order(omega_sq: float, kernel: Callable[[np.ndarray], np.ndarray],
                          t_max: float, dt: float, richardson: int = 2,
                          with_derivative: bool = False):
    """Solve G'' + omega_sq G + int_0^t N(t-s) G(s) ds = 0 with G(0)=0, G'(0)=1.

    The step is a trigonometric two-step recursion that is exact when N = 0;
    the history integral uses the trapezoid rule. The scheme is symmetric, so
    its error expands in even powers of dt, and `richardson` levels of
    step halving are combined to remove the leading terms.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("t_max and dt must be positive")
    n_coarse = int(round(t_max / dt))
    if abs(n_coarse * dt - t_max) > 1e-9 * t_max:
        raise ValueError("t_max must be an integer multiple of dt")
    if n_coarse < 3:
        raise ValueError("need at least 3 steps")
    levels_G, levels_dG = [], []
    for lev in range(richardson + 1):
        r = 2 ** lev
        h = dt / r
        n = n_coarse * r
        t_fine = h * np.arange(n + 2)
        N = np.asarray(kernel(t_fine), dtype=float)
        G, dG = _volterra_level(omega_sq, N, h, n)
        levels_G.append(G[::r])
        levels_dG.append(dG[::r])
    G = _richardson(levels_G)
    dG = _richardson(levels_dG)
    times = dt * np.arange(n_coarse + 1)
    g_series = SampledSeries(times, G, meta={"dt": dt, "richardson": richardson})
    if with_derivative:
        return g_series, SampledSeries(times, dG, meta={"dt": dt, "richardson": richardson})
    return g_series


def _richardson(levels):
    """Even-power Richardson table; levels[i] computed with step dt / 2**i."""
    table = [np.asarray(x, dtype=float) for x in levels]
    for j in range(1, len(table)):
        fac = 4.0 ** j
        table = [(fac * table[i + 1] - table[i]) / (fac - 1.0) for i in range(len(table) - 1)]
    return table[0]


# ------------------------------------------------------------- decay fitting

def tail_envelope(values: np.ndarray) -> np.ndarray:
    """env[i] = max_{j >= i} |values[j]|, a monotone envelope of a decaying signal."""
    a = np.abs(np.asarray(values))
    return np.maximum.accumulate(a[::-1])[::-1]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    n_samples: int


def fit_power_law(times, values, window: tuple[float, float], min_samples: int = 8) -> PowerLawFit:
    """Least-squares fit of |values| ~ prefactor * times**(-exponent) in log-log."""
    t = np.asarray(times, dtype=float)
    y = np.abs(np.asarray(values))
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    t, y = t[sel], y[sel]
    if t.size < min_samples:
        raise FitError(f"only {t.size} samples in window {window}; need {min_samples}")
    if np.any(t <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise FitError("power-law fit needs strictly positive finite samples")
    X = np.log(t)
    Y = np.log(y)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = np.sum((Y - Y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(-slope), float(math.exp(intercept)), float(r2), int(t.size))
