"""Periodic 1D-1V relativistic Vlasov-Klein-Gordon solver.

    f_t + vhat f_x + E f_v = 0,  E = -phi_x,
    phi_tt - phi_xx + m0^2 phi = -(rho - n_ions),  rho = int f dv.

Strang splitting: half x-advection, Stormer-Verlet step of the field with the
density frozen at the half step, full v-advection with the time-centred field,
half x-advection. Both advections are semi-Lagrangian with 4-point Lagrange
interpolation (periodic in x, zero inflow in v).

The conserved energy is

    int int (<v> - 1) f + 1/2 int (phi_t^2 + phi_x^2 + m0^2 phi^2) + int phi (rho - n_ions).
"""
from __future__ import annotations

import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .equilibria import EquilibriumProfile, canonical_profile
from .numerics import PowerLawFit, fit_power_law, tail_envelope


class SimulationConfigError(ValueError):
    """Invalid simulation parameters."""


@dataclass
class SimConfig:
    nx: int = 256
    nv: int = 256
    length: float = 4.0 * math.pi
    v_max: float = 2.0
    dt: float = 1e-2
    t_end: float = 20.0
    m0: float = 2.0
    n_ions: float = 0.5
    amplitude: float = 1e-2
    mode: int = 1
    perturbation: str = "density"
    diag_every: int = 10

    def validate(self):
        if self.nx < 8 or self.nv < 8:
            raise SimulationConfigError("nx and nv must be at least 8")
        for name in ("length", "v_max", "dt", "t_end", "m0"):
            if not getattr(self, name) > 0:
                raise SimulationConfigError(f"{name} must be positive")
        if self.n_ions < 0:
            raise SimulationConfigError("n_ions must be non-negative")
        if self.perturbation not in ("density", "field", "none"):
            raise SimulationConfigError("perturbation must be 'density', 'field' or 'none'")
        if self.mode < 1 or self.mode > self.nx // 2 - 1:
            raise SimulationConfigError("mode number out of range")
        n_steps = self.t_end / self.dt
        if abs(n_steps - round(n_steps)) > 1e-9 * n_steps:
            raise SimulationConfigError("t_end must be an integer multiple of dt")
        dx = self.length / self.nx
        kmax = math.pi / dx
        if self.dt * math.sqrt(kmax ** 2 + self.m0 ** 2) >= 2.0:
            raise SimulationConfigError(
                f"dt = {self.dt} violates the Klein-Gordon stability limit "
                f"{2.0 / math.sqrt(kmax ** 2 + self.m0 ** 2):.4g}")
        if self.diag_every < 1:
            raise SimulationConfigError("diag_every must be >= 1")
        return self

    @property
    def k1(self) -> float:
        return 2.0 * math.pi * self.mode / self.length


@dataclass
class Grid1D:
    x: np.ndarray
    v: np.ndarray
    dx: float
    dv: float

    @property
    def vhat(self):
        return self.v / np.sqrt(1.0 + self.v ** 2)

    @property
    def gamma(self):
        return np.sqrt(1.0 + self.v ** 2)


def make_grid(cfg: SimConfig) -> Grid1D:
    dx = cfg.length / cfg.nx
    dv = 2.0 * cfg.v_max / cfg.nv
    x = dx * np.arange(cfg.nx)
    v = -cfg.v_max + dv * (np.arange(cfg.nv) + 0.5)
    return Grid1D(x, v, dx, dv)


@dataclass
class FieldState1D:
    f: np.ndarray
    phi: np.ndarray
    phi_t: np.ndarray
    time: float
    n_ions: float
    clipped_mass: float = 0.0


def equilibrium_1d(cfg: SimConfig, grid: Grid1D, profile: EquilibriumProfile | None = None) -> np.ndarray:
    """1D equilibrium on the velocity grid, renormalized so that sum f dv = n_ions exactly."""
    prof = profile or canonical_profile(cfg.m0, cfg.n_ions if cfg.n_ions > 0 else 0.5, dim=1)
    if prof.speed_max >= cfg.v_max:
        raise SimulationConfigError("velocity box must contain the equilibrium support")
    feq = prof.phi(grid.gamma)
    mass = feq.sum() * grid.dv
    return feq * (cfg.n_ions / mass) if mass > 0 else feq


def init_state(cfg: SimConfig, profile: EquilibriumProfile | None = None) -> tuple[FieldState1D, Grid1D]:
    cfg.validate()
    grid = make_grid(cfg)
    feq = equilibrium_1d(cfg, grid, profile)
    f = np.repeat(feq[None, :], cfg.nx, axis=0)
    phi = np.zeros(cfg.nx)
    if cfg.perturbation == "density":
        f = f * (1.0 + cfg.amplitude * np.cos(cfg.k1 * grid.x))[:, None]
    elif cfg.perturbation == "field":
        phi = cfg.amplitude * np.cos(cfg.k1 * grid.x)
    return FieldState1D(f, phi, np.zeros(cfg.nx), 0.0, cfg.n_ions), grid


# ------------------------------------------------------------- interpolation

def _lagrange_weights(theta):
    """Cubic Lagrange weights for nodes -1, 0, 1, 2 evaluated at theta in [0, 1)."""
    t = theta
    return (-t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0)


class _XShift:
    """Periodic shift of each velocity column by vhat_j * tau with precomputed stencils."""

    def __init__(self, grid: Grid1D, tau: float):
        nx = grid.x.size
        d = grid.vhat * tau / grid.dx          # displacement in cells per column
        base = np.floor(-d)                     # foot = i - d = i + base + theta
        theta = -d - base
        i = np.arange(nx)[:, None]
        self.idx = [((i + base[None, :].astype(int) + o) % nx) for o in (-1, 0, 1, 2)]
        self.w = _lagrange_weights(theta)
        self.cols = np.arange(grid.v.size)[None, :]

    def __call__(self, f):
        out = np.zeros_like(f)
        for idx, w in zip(self.idx, self.w):
            out += w[None, :] * f[idx, self.cols]
        return out


def _v_shift(f, E, tau, dv):
    """f(x, v - E tau) with zero values outside the velocity box."""
    nx, nv = f.shape
    d = E * tau / dv
    base = np.floor(-d)
    theta = -d - base
    fp = np.zeros((nx, nv + 8))
    fp[:, 4:-4] = f
    j = np.arange(nv)[None, :] + 4 + base[:, None].astype(int)
    rows = np.arange(nx)[:, None]
    out = np.zeros_like(f)
    w = _lagrange_weights(theta)
    if np.max(np.abs(base)) > 2:
        raise FloatingPointError("velocity shift exceeds two cells; reduce dt")
    for o, wo in zip((-1, 0, 1, 2), w):
        out += wo[:, None] * fp[rows, j + o]
    return out


# --------------------------------------------------------------- field part

def _wavenumbers(cfg: SimConfig):
    return 2.0 * math.pi * np.fft.rfftfreq(cfg.nx, d=cfg.length / cfg.nx)


def spectral_dx(u, kx):
    return np.fft.irfft(1j * kx * np.fft.rfft(u), n=u.size)


def spectral_lap(u, kx):
    return np.fft.irfft(-(kx ** 2) * np.fft.rfft(u), n=u.size)


class Simulator:
    def __init__(self, cfg: SimConfig, profile: EquilibriumProfile | None = None):
        self.cfg = cfg.validate()
        self.state, self.grid = init_state(cfg, profile)
        self.kx = _wavenumbers(cfg)
        self._xhalf = _XShift(self.grid, 0.5 * cfg.dt)
        self._f_cap = 10.0 * max(float(np.max(self.state.f)), 1e-300)

    def density(self, f):
        return f.sum(axis=1) * self.grid.dv

    def _accel(self, phi, rho):
        return spectral_lap(phi, self.kx) - self.cfg.m0 ** 2 * phi - (rho - self.state.n_ions)

    def step(self):
        cfg, st = self.cfg, self.state
        dt = cfg.dt
        f = self._xhalf(st.f)
        rho = self.density(f)
        a0 = self._accel(st.phi, rho)
        phi_new = st.phi + dt * st.phi_t + 0.5 * dt * dt * a0
        a1 = self._accel(phi_new, rho)
        phi_t_new = st.phi_t + 0.5 * dt * (a0 + a1)
        E_mid = -0.5 * (spectral_dx(st.phi, self.kx) + spectral_dx(phi_new, self.kx))
        f = _v_shift(f, E_mid, dt, self.grid.dv)
        f = self._xhalf(f)
        neg = f < 0
        clipped = 0.0
        if np.any(neg):
            clipped = float(-f[neg].sum() * self.grid.dx * self.grid.dv)
            f[neg] = 0.0
        if np.max(f) > self._f_cap:
            raise FloatingPointError(f"f exceeded 10x its initial maximum at t = {st.time + dt:.6g}")
        self.state = FieldState1D(f, phi_new, phi_t_new, st.time + dt, st.n_ions,
                                  st.clipped_mass + clipped)
        return self.state

    def diagnostics(self, n_modes: int = 8) -> dict:
        st, g, cfg = self.state, self.grid, self.cfg
        dxdv = g.dx * g.dv
        rho = self.density(st.f)
        phi_x = spectral_dx(st.phi, self.kx)
        kinetic = float(np.sum(st.f * (g.gamma - 1.0)[None, :]) * dxdv)
        field_e = float(0.5 * np.sum(st.phi_t ** 2 + phi_x ** 2 + cfg.m0 ** 2 * st.phi ** 2) * g.dx)
        coupling = float(np.sum(st.phi * (rho - st.n_ions)) * g.dx)
        modes = np.fft.rfft(st.phi)[1:n_modes + 1] / cfg.nx
        return {
            "time": st.time,
            "mass": float(st.f.sum() * dxdv),
            "l2": float(math.sqrt(np.sum(st.f ** 2) * dxdv)),
            "energy": kinetic + field_e + coupling,
            "kinetic": kinetic,
            "field": field_e,
            "coupling": coupling,
            "sup_E": float(np.max(np.abs(phi_x))),
            "clipped_mass": st.clipped_mass,
            "phi_mode": modes,
        }


@dataclass
class RunReport:
    config: dict
    times: np.ndarray
    diagnostics: list = field(default_factory=list)
    mode_series: np.ndarray | None = None

    def series(self, key):
        return np.array([d[key] for d in self.diagnostics])

    @property
    def mass_drift(self) -> float:
        m = self.series("mass")
        return float(np.max(np.abs(m - m[0])) / m[0])

    @property
    def energy_drift(self) -> float:
        e = self.series("energy")
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    @property
    def l2_increase(self) -> float:
        l2 = self.series("l2")
        return float(np.max(np.diff(l2))) if l2.size > 1 else 0.0

    def field_decay_fit(self, window) -> PowerLawFit:
        """Power-law fit of the tail envelope of sup|E|; reported only, the 1D rate
        is not expected to match the 3D one."""
        return fit_power_law(self.times, tail_envelope(self.series("sup_E")), window, min_samples=4)


def run_experiment(cfg: SimConfig, profile: EquilibriumProfile | None = None,
                   record_mode_every_step: bool = False) -> RunReport:
    sim = Simulator(cfg, profile)
    n_steps = int(round(cfg.t_end / cfg.dt))
    diags = [sim.diagnostics()]
    modes = [np.fft.rfft(sim.state.phi)[cfg.mode] / cfg.nx] if record_mode_every_step else None
    for n in range(1, n_steps + 1):
        sim.step()
        if record_mode_every_step:
            modes.append(np.fft.rfft(sim.state.phi)[cfg.mode] / cfg.nx)
        if n % cfg.diag_every == 0 or n == n_steps:
            d = sim.diagnostics()
            if not np.isfinite(d["energy"]):
                raise FloatingPointError(f"non-finite energy at t = {d['time']}")
            diags.append(d)
    times = np.array([d["time"] for d in diags])
    return RunReport(asdict(cfg), times, diags, None if modes is None else np.array(modes))


# -------------------------------------------------------------- snapshots

_MAGIC = b"LKSNAP01"


def write_snapshot(path, state: FieldState1D):
    """Binary layout: magic(8) nx(int64) nv(int64) time(float64), then f (row-major
    float64, nx*nv), phi (nx) and phi_t (nx), all little-endian."""
    nx, nv = state.f.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqd", nx, nv, state.time))
        fh.write(np.ascontiguousarray(state.f, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.phi, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.phi_t, dtype="<f8").tobytes())


def read_snapshot(path, n_ions: float = 0.0) -> FieldState1D:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path} is not a snapshot file")
        nx, nv, t = struct.unpack("<qqd", fh.read(24))
        f = np.frombuffer(fh.read(8 * nx * nv), dtype="<f8").reshape(nx, nv).copy()
        phi = np.frombuffer(fh.read(8 * nx), dtype="<f8").copy()
        phi_t = np.frombuffer(fh.read(8 * nx), dtype="<f8").copy()
    return FieldState1D(f, phi, phi_t, t, n_ions)
