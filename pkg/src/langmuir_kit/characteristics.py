"""Characteristics dX/ds = vhat(V), dV/ds = E(s, X) in prescribed synthetic fields.

A synthetic field is a sum of Langmuir-type modes, each contributing
2 Re[pol exp(i k.x + lam s) B(s)] with lam = +-i nu(|k|) and a slowly varying
envelope B, plus an optional smooth non-oscillating remainder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import PowerLawFit, fit_power_law, oscillatory_quad, tail_envelope


class ObserverInsideLightConeError(ValueError):
    """(x - X_s)/(t - s) reached speed 1."""


def vhat(V):
    V = np.asarray(V, dtype=float)
    return V / np.sqrt(1.0 + np.sum(V * V, axis=-1, keepdims=True))


def grad_vhat(V):
    """d vhat / dV = (I - vhat vhat^T) / <V>, shape (..., 3, 3)."""
    V = np.asarray(V, dtype=float)
    br = np.sqrt(1.0 + np.sum(V * V, axis=-1))
    vh = V / br[..., None]
    eye = np.eye(V.shape[-1])
    return (eye - vh[..., :, None] * vh[..., None, :]) / br[..., None, None]


@dataclass(frozen=True)
class PowerLawEnvelope:
    """B(s) = amplitude <s>^(-exponent)."""

    amplitude: complex = 1.0
    exponent: float = 0.0

    def value(self, s):
        return self.amplitude * (1.0 + s * s) ** (-0.5 * self.exponent)

    def derivative(self, s):
        return -self.exponent * self.amplitude * s * (1.0 + s * s) ** (-0.5 * self.exponent - 1.0)


@dataclass(frozen=True)
class Mode:
    k: np.ndarray
    nu: float
    branch: int = 1
    polarization: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0], dtype=complex))
    envelope: PowerLawEnvelope = field(default_factory=PowerLawEnvelope)

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float))
        object.__setattr__(self, "polarization", np.asarray(self.polarization, dtype=complex))

    @property
    def lam(self) -> complex:
        return self.branch * 1j * self.nu

    def phase(self, s, X):
        """exp(i k.X + lam s) for positions X of shape (n, 3)."""
        return np.exp(1j * (X @ self.k) + self.lam * s)

    def omega(self, V):
        """lam + i k.vhat(V)."""
        return self.lam + 1j * (vhat(V) @ self.k)


@dataclass(frozen=True)
class RegularField:
    """E^r(s, x) = amplitude cos(q.x + theta) <s>^(-exponent)."""

    amplitude: np.ndarray
    wavevector: np.ndarray
    exponent: float = 3.0
    theta: float = 0.0

    def value(self, s, X):
        c = np.cos(X @ np.asarray(self.wavevector) + self.theta)
        return (1.0 + s * s) ** (-0.5 * self.exponent) * c[:, None] * np.asarray(self.amplitude)[None, :]

    def gradient(self, s, X):
        sn = -np.sin(X @ np.asarray(self.wavevector) + self.theta)
        a = np.asarray(self.amplitude)
        q = np.asarray(self.wavevector)
        return (1.0 + s * s) ** (-0.5 * self.exponent) * sn[:, None, None] * (a[:, None] * q[None, :])[None]


@dataclass
class SyntheticField:
    modes: list = field(default_factory=list)
    regular: RegularField | None = None

    def _check(self, s):
        if s < -1e-12:
            raise ValueError(f"field is defined for s >= 0 only (got {s})")

    def oscillatory(self, s, X):
        out = np.zeros(X.shape)
        for m in self.modes:
            out += 2.0 * (np.outer(m.phase(s, X) * m.envelope.value(s), m.polarization)).real
        return out

    def E(self, s, X):
        self._check(s)
        out = self.oscillatory(s, X)
        if self.regular is not None:
            out += self.regular.value(s, X)
        return out

    def grad_E(self, s, X):
        """[..., i, j] = d E_i / d x_j."""
        self._check(s)
        out = np.zeros(X.shape + (3,))
        for m in self.modes:
            c = m.phase(s, X) * m.envelope.value(s)
            out += 2.0 * (c[:, None, None] * m.polarization[None, :, None] * (1j * m.k)[None, None, :]).real
        if self.regular is not None:
            out += self.regular.gradient(s, X)
        return out

    def first_antiderivative(self, s, X, V):
        """V^osc: sum of 2 Re[pol exp(i k.X + lam s) B(s) / (lam + i k.vhat)]."""
        out = np.zeros(X.shape)
        for m in self.modes:
            c = m.phase(s, X) * m.envelope.value(s) / m.omega(V)
            out += 2.0 * np.outer(c, m.polarization).real
        return out

    def transfer_density(self, s, X, V):
        """Integrand of the remainder after one integration by parts along a trajectory.

        sum 2 Re[pol e B'(s) / w] - (grad_v vhat E) . grad_x E2 - E^r, with E2 the second
        antiderivative pol e B / w^2 and w = lam + i k.vhat(V).
        """
        E = self.E(s, X)
        dvE = np.einsum("nij,nj->ni", grad_vhat(V), E)
        out = np.zeros(X.shape)
        for m in self.modes:
            w = m.omega(V)
            e = m.phase(s, X)
            t1 = e * m.envelope.derivative(s) / w
            t2 = e * m.envelope.value(s) / (w * w) * (1j * (dvE @ m.k))
            out += 2.0 * np.outer(t1 - t2, m.polarization).real
        if self.regular is not None:
            out -= self.regular.value(s, X)
        return out


# ----------------------------------------------------------------- integrator

@dataclass
class Trajectory:
    s: np.ndarray
    X: np.ndarray
    V: np.ndarray
    t: float
    x: np.ndarray
    v: np.ndarray
    Phi: np.ndarray | None = None
    extra: np.ndarray | None = None


def _rk4(rhs, y0, s0, s1, ds):
    n = max(int(math.ceil(abs(s1 - s0) / ds - 1e-12)), 1)
    h = (s1 - s0) / n
    s = s0 + h * np.arange(n + 1)
    s[-1] = s1
    ys = np.empty((n + 1,) + y0.shape, dtype=y0.dtype)
    ys[0] = y0
    y = y0
    for i in range(n):
        si = s[i]
        k1 = rhs(si, y)
        k2 = rhs(si + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(si + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(s[i + 1], y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y
    return s, ys


def _as_batch(a):
    a = np.asarray(a, dtype=float)
    return a[None, :] if a.ndim == 1 else a


def integrate(field_: SyntheticField, x, v, s_start: float, s_end: float, ds: float,
              variational: bool = False, augment=None, n_aug: int = 0) -> Trajectory:
    """RK4 from s_start to s_end (either direction) for a batch of initial points.

    The state per point is (X, V[, Phi (6x6)][, augmented]) where `augment`
    returns d(aug)/ds from (s, X, V).
    """
    if ds <= 0:
        raise ValueError("ds must be positive")
    if min(s_start, s_end) < 0:
        raise ValueError("characteristics are only integrated over s >= 0")
    x, v = (np.array(a) for a in np.broadcast_arrays(_as_batch(x), _as_batch(v)))
    n = x.shape[0]
    width = 6 + (36 if variational else 0) + n_aug
    y0 = np.zeros((n, width))
    y0[:, :3], y0[:, 3:6] = x, v
    if variational:
        y0[:, 6:42] = np.eye(6).ravel()[None, :]

    def rhs(s, y):
        X, V = y[:, :3], y[:, 3:6]
        out = np.empty_like(y)
        out[:, :3] = vhat(V)
        out[:, 3:6] = field_.E(s, X)
        if variational:
            Phi = y[:, 6:42].reshape(n, 6, 6)
            A = np.zeros((n, 6, 6))
            A[:, :3, 3:] = grad_vhat(V)
            A[:, 3:, :3] = field_.grad_E(s, X)
            out[:, 6:42] = np.matmul(A, Phi).reshape(n, 36)
        if n_aug:
            out[:, width - n_aug:] = augment(s, X, V)
        return out

    s, ys = _rk4(rhs, y0, s_start, s_end, ds)
    Phi = ys[:, :, 6:42].reshape(len(s), n, 6, 6) if variational else None
    extra = ys[:, :, width - n_aug:] if n_aug else None
    return Trajectory(s, ys[:, :, :3], ys[:, :, 3:6], s_start, x, v, Phi, extra)


def integrate_backward(field_: SyntheticField, x, v, t: float, ds: float = 0.01,
                       variational: bool = True) -> Trajectory:
    """(X_{s,t}, V_{s,t}) for s from t down to 0 with X_t = x, V_t = v."""
    return integrate(field_, x, v, t, 0.0, ds, variational)


def integrate_forward(field_: SyntheticField, x, v, t_end: float, ds: float = 0.01) -> Trajectory:
    return integrate(field_, x, v, 0.0, t_end, ds, False)


def straightened_average(traj: Trajectory) -> np.ndarray:
    """(x - X_s)/(t - s), with vhat(v) at s = t; shape (n_s, n, 3)."""
    dt = traj.t - traj.s
    out = np.empty_like(traj.X)
    at_t = np.abs(dt) < 1e-14
    out[at_t] = vhat(traj.v)[None, :, :].repeat(int(at_t.sum()), axis=0)
    mask = ~at_t
    out[mask] = (traj.x[None, :, :] - traj.X[mask]) / dt[mask][:, None, None]
    if np.any(np.linalg.norm(out, axis=-1) >= 1.0):
        raise ObserverInsideLightConeError("straightened velocity reached speed 1")
    return out


def jacobian_check(traj: Trajectory) -> dict:
    """Determinant diagnostics of the 6x6 variational matrix along a backward trajectory."""
    if traj.Phi is None:
        raise ValueError("trajectory was integrated without the variational matrix")
    Phi = traj.Phi
    det_full = np.linalg.det(Phi)
    det_xx = np.linalg.det(Phi[..., :3, :3])
    det_xv = np.linalg.det(Phi[..., :3, 3:])
    lag = np.abs(traj.t - traj.s)
    late = lag > 1.0
    ratio = np.abs(det_xv[late]) / lag[late, None] ** 3 if np.any(late) else np.array([np.nan])
    return {
        "liouville_max_dev": float(np.max(np.abs(det_full - 1.0))),
        "det_dx_max_dev": float(np.max(np.abs(det_xx - 1.0))),
        "det_dv_over_lag3_min": float(np.min(ratio)),
        "det_dv_over_lag3_max": float(np.max(ratio)),
        "det_dv": det_xv,
    }


def free_jacobian_det(v, lag):
    """det dX/dv for free streaming: -(t-s)^3 <v>^-5."""
    v = np.asarray(v, dtype=float)
    return -(lag ** 3) * (1.0 + np.sum(v * v, axis=-1)) ** -2.5


# ------------------------------------------------------------ oscillation

def osc_integral_identity(mode: Mode, x, v, t: float) -> float:
    """|int_0^t E(tau, x + vhat tau) dtau - [E(t, x + vhat t) - E(0, x)] / w| for one mode.

    Constant envelope; E is the complex field pol exp(i k.x + lam tau), w = lam + i k.vhat.
    """
    x = np.asarray(x, dtype=float)
    vh = vhat(np.asarray(v, dtype=float))
    w = mode.lam + 1j * float(mode.k @ vh)
    base = np.exp(1j * float(mode.k @ x))
    if t <= 0.0:
        return 0.0
    # w is purely imaginary for Langmuir modes
    lhs = base * oscillatory_quad(lambda s: np.ones_like(s), lambda s: w.imag * s, 0.0, t, abs(w))
    rhs = base * (np.exp(w * t) - 1.0) / w
    return float(np.max(np.abs((lhs - rhs) * mode.polarization)))


@dataclass
class VelocityDecomposition:
    s: np.ndarray
    V: np.ndarray
    V_osc: np.ndarray
    V_tr: np.ndarray
    residual: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    def fit(self, window=(10.0, 100.0)) -> tuple[PowerLawFit, PowerLawFit]:
        """Decay exponents of the envelopes of |V^osc_{s,t}| and |V^tr_{s,t}| in s."""
        s = self.s[::-1]
        osc = np.linalg.norm(self.V_osc, axis=-1)[::-1, 0]
        tr = np.linalg.norm(self.V_tr, axis=-1)[::-1, 0]
        return (fit_power_law(s, tail_envelope(osc), window),
                fit_power_law(s, tail_envelope(tr), window))


def velocity_decomposition_check(field_: SyntheticField, x, v, t: float, ds: float = 0.02) -> VelocityDecomposition:
    """Integrate V backward with the remainder V^tr_{s,t} = int_s^t Q and test

    V_s = v - V^osc(t) + V^osc(s) + V^tr_{s,t}.
    """
    def aug(s, X, V):
        return -field_.transfer_density(s, X, V)

    traj = integrate(field_, x, v, t, 0.0, ds, False, aug, 3)
    n_pts = traj.X.shape[1]
    s_rep = np.repeat(traj.s, n_pts)
    V_osc = field_.first_antiderivative(s_rep, traj.X.reshape(-1, 3),
                                        traj.V.reshape(-1, 3)).reshape(traj.X.shape)
    V_tr = traj.extra
    recon = traj.v[None] - V_osc[0][None] + V_osc + V_tr
    return VelocityDecomposition(traj.s, traj.V, V_osc, V_tr, traj.V - recon)


@dataclass
class ScatteringReport:
    times: np.ndarray
    V: np.ndarray
    X: np.ndarray
    V_inf: np.ndarray
    velocity_fit: PowerLawFit
    position_fit: PowerLawFit
    straight_position_fit: PowerLawFit


def scattering_limit(field_: SyntheticField, x, v, t_end: float, ds: float = 0.02,
                     window=(10.0, 100.0)) -> ScatteringReport:
    """Forward characteristics and Cauchy-type convergence rates.

    V_inf is estimated by V(t_end). Reported envelopes (tail maxima) are
      |V(t) - V_inf|,
      |Y(t) - Y(t_end)|   with Y = X - x - t vhat(V_inf),
      |P(t) - P(t_end)|   with P = X - x - t vhat(V(t)).
    """
    traj = integrate_forward(field_, x, v, t_end, ds)
    t = traj.s
    V = traj.V[:, 0]
    X = traj.X[:, 0]
    x0 = np.asarray(x, dtype=float)
    V_inf = V[-1]
    dv = np.linalg.norm(V - V_inf, axis=-1)
    Y = X - x0 - t[:, None] * vhat(V_inf)[None, :]
    P = X - x0 - t[:, None] * vhat(V)
    dy = np.linalg.norm(Y - Y[-1], axis=-1)
    dp = np.linalg.norm(P - P[-1], axis=-1)
    return ScatteringReport(t, V, X, V_inf,
                            fit_power_law(t, tail_envelope(dv), window),
                            fit_power_law(t, tail_envelope(dy), window),
                            fit_power_law(t, tail_envelope(dp), window))


def random_mode_field(nu_of_k, n_modes: int, rng: np.random.Generator, eps: float = 0.05,
                      envelope_exponent: float = 1.5, regular_eps: float | None = None,
                      k_range=(0.3, 1.5), regular_wavevector_scale: float = 0.0) -> SyntheticField:
    """Longitudinal modes (pol = -i k A) with random directions and phases.

    The optional remainder field decays like <s>^-3; by default it is uniform in
    space so that its contribution along a trajectory is a clean power law.
    """
    modes = []
    for _ in range(n_modes):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        kv = d * rng.uniform(*k_range)
        amp = eps * np.exp(2j * math.pi * rng.random())
        modes.append(Mode(kv, float(nu_of_k(np.linalg.norm(kv))), int(rng.choice([-1, 1])),
                          -1j * kv, PowerLawEnvelope(amp, envelope_exponent)))
    reg = None
    if regular_eps:
        a = rng.normal(size=3)
        reg = RegularField(regular_eps * a / np.linalg.norm(a),
                           regular_wavevector_scale * rng.normal(size=3), 3.0,
                           float(2 * math.pi * rng.random()))
    return SyntheticField(modes, reg)


def reference_decay_field(nu_of_k, eps: float = 0.05, regular_eps: float = 0.05) -> SyntheticField:
    """Fixed field used for decay-rate measurements along characteristics.

    Two longitudinal modes with envelopes eps <s>^-3/2 on opposite branches and a
    spatially uniform remainder regular_eps <s>^-3.
    """
    k1 = np.array([0.7, 0.0, 0.0])
    k2 = np.array([0.0, 1.1, 1.1]) / math.sqrt(2.0)
    modes = [
        Mode(k1, float(nu_of_k(0.7)), 1, -1j * k1, PowerLawEnvelope(eps, 1.5)),
        Mode(k2, float(nu_of_k(1.1)), -1, -1j * k2, PowerLawEnvelope(eps * np.exp(0.7j), 1.5)),
    ]
    reg = RegularField(regular_eps * np.array([1.0, -1.0, 0.5]) / 1.5, np.zeros(3), 3.0, 0.0)
    return SyntheticField(modes, reg)
