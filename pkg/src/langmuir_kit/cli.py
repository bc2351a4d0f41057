"""Command-line front end.

    langmuir-kit <subcommand> [--config FILE] [--out DIR] [--seed N] [--workers N]

Subcommands: dispersion, green, linear, traj, sim1d, verify. Each reads the
top-level `profile` mapping and its own section of the config file, writes
CSV (and JSON summary) artifacts to the output directory and exits with
0 on success, 1 on configuration errors, 2 on failed assertions and 3 on
numerical failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, check_keys, config_hash, get_number, load_config,
                     resolve_outdir, write_csv)
from .equilibria import pressure_coefficient_e0, profile_from_config
from .linear_field import CFLViolation
from .nonlinear1d import SimConfig, SimulationConfigError

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT, EXIT_NUMERIC = 0, 1, 2, 3
SUBCOMMANDS = ("dispersion", "green", "linear", "traj", "sim1d", "verify")
TOP_KEYS = {"profile", "output_dir", "seed", "workers"} | set(SUBCOMMANDS)


class AcceptanceFailure(AssertionError):
    """At least one verify criterion failed."""


# ------------------------------------------------------------------ helpers

def _pmap(fn, items, workers: int):
    """Ordered map; results come back in input order whatever the worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _float_list(cfg, key, default):
    val = cfg.get(key, default)
    if isinstance(val, (int, float)):
        val = [val]
    try:
        out = [float(x) for x in val]
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number or a list of numbers") from None
    if not out:
        raise ConfigError(f"{key} must not be empty")
    return out


def _vector(val, key, n=3):
    try:
        a = np.asarray(val, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of {n} numbers") from None
    if a.size != n:
        raise ConfigError(f"{key} must have {n} entries")
    return a


def _complex(val, key):
    if isinstance(val, (int, float)):
        return complex(val)
    if isinstance(val, (list, tuple)) and len(val) == 2:
        return complex(float(val[0]), float(val[1]))
    raise ConfigError(f"{key} must be a number or a [re, im] pair")


def _window(cfg, key, default):
    w = _float_list(cfg, key, default)
    if len(w) != 2 or not 0 < w[0] < w[1]:
        raise ConfigError(f"{key} must be [t_lo, t_hi] with 0 < t_lo < t_hi")
    return tuple(w)


def _fit_or_none(times, values, window, min_samples=8):
    from .numerics import FitError, fit_power_law, tail_envelope
    try:
        f = fit_power_law(times, tail_envelope(values), window, min_samples=min_samples)
    except FitError:
        return None
    return {"exponent": f.exponent, "prefactor": f.prefactor, "r_squared": f.r_squared,
            "n_samples": f.n_samples}


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _tag(k: float) -> str:
    return f"{k:.6g}".replace(".", "p").replace("-", "m")


class Context:
    def __init__(self, cfg: dict, outdir: Path, seed: int, workers: int):
        self.cfg = cfg
        self.outdir = outdir
        self.seed = seed
        self.workers = workers
        self.hash = config_hash({**cfg, "seed": seed})

    def section(self, name, allowed) -> dict:
        sec = self.cfg.get(name) or {}
        if not isinstance(sec, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        check_keys(sec, allowed, name)
        return sec

    def profile(self, dim=3):
        pc = dict(self.cfg.get("profile") or {})
        pc.setdefault("dim", dim)
        try:
            return profile_from_config(pc)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"profile: {exc}") from exc

    def evaluator(self):
        from .dispersion import DielectricEvaluator
        prof = self.profile()
        try:
            return DielectricEvaluator.from_profile(prof), prof
        except ValueError as exc:
            raise ConfigError(f"profile: {exc}") from exc

    def csv(self, name, header, rows):
        return write_csv(self.outdir / name, header, rows, self.hash, self.seed)


# -------------------------------------------------------------- dispersion

def _dispersion_chunk(args):
    from .dispersion import langmuir_point
    ev, ks = args
    return [langmuir_point(ev, k) for k in ks]


def cmd_dispersion(ctx: Context) -> int:
    from .dispersion import DispersionCurve, check_curve, penrose_scan
    sec = ctx.section("dispersion", {"k_min", "k_max", "k_step", "k", "n_tau", "check"})
    if "k" in sec:
        k = np.array(_float_list(sec, "k", None))
    else:
        k_min = get_number(sec, "k_min", 0.0, minimum=0.0)
        k_max = get_number(sec, "k_max", 5.0, positive=True)
        step = get_number(sec, "k_step", 0.05, positive=True)
        n = int(math.floor((k_max - k_min) / step + 1e-9)) + 1
        k = np.round(k_min + step * np.arange(n), 12)
    if k.size < 2 or np.any(np.diff(k) <= 0) or k[0] < 0:
        raise ConfigError("k grid must be increasing, non-negative and have at least 2 points")
    n_tau = get_number(sec, "n_tau", 201, integer=True, minimum=3)
    ev, prof = ctx.evaluator()

    chunks = [c for c in np.array_split(k, max(1, ctx.workers)) if c.size]
    parts = _pmap(_dispersion_chunk, [(ev, c) for c in chunks], ctx.workers)
    pts = [p for part in parts for p in part]
    nu, d1, d2 = (np.array([p[i] for p in pts]) for i in range(3))
    ap = np.array([p[3] for p in pts], dtype=complex)
    curve = DispersionCurve(k, nu, d1, d2, ap, ap.conj(), ev.m0, ev.tau0_sq)
    rep = penrose_scan(ev, k, np.linspace(-1.0, 1.0, n_tau), raise_on_violation=False)
    margin = rep.ratio.min(axis=1)
    rows = [[k[i], nu[i], d1[i], d2[i], ap[i].real, ap[i].imag, margin[i]] for i in range(k.size)]
    path = ctx.csv("dispersion.csv", ["k", "nu_star", "nu_prime", "nu_second", "re_a_plus",
                                      "im_a_plus", "penrose_margin"], rows)
    summary = {
        "profile": prof.name, "m0": ev.m0, "kappa0_sq": ev.kappa0_sq, "tau0_sq": ev.tau0_sq,
        "m1_sq": ev.m1_sq, "e0": pressure_coefficient_e0(prof), "penrose_constant": rep.c,
        "penrose_argmin": {"k": rep.k_at_min, "tau": rep.tau_at_min},
        "behaviour_constants": curve.behaviour_constants(),
    }
    _write_json(ctx.outdir / "dispersion.json", summary)
    print(f"wrote {path} ({k.size} rows), Penrose constant {rep.c:.6g}")
    if sec.get("check", True):
        check_curve(curve)
        if not rep.c > 0:
            from .dispersion import PenroseViolation
            raise PenroseViolation(f"Penrose margin vanishes at k = {rep.k_at_min}, tau = {rep.tau_at_min}")
    return EXIT_OK


# ------------------------------------------------------------------- green

def _green_one(args):
    from .greenfn import solve_mode_green
    ev, k, t_max, dt = args
    return solve_mode_green(ev, k, t_max, dt)


def cmd_green(ctx: Context) -> int:
    sec = ctx.section("green", {"k", "t_max", "dt", "fit_window"})
    ks = _float_list(sec, "k", [0.5, 1.0, 2.0])
    t_max = get_number(sec, "t_max", 100.0, positive=True)
    dt = get_number(sec, "dt", 0.02, positive=True)
    if abs(t_max / dt - round(t_max / dt)) > 1e-9 * t_max / dt:
        raise ConfigError("t_max must be an integer multiple of dt")
    window = _window(sec, "fit_window", [10.0, min(100.0, t_max)])
    ev, prof = ctx.evaluator()
    greens = _pmap(_green_one, [(ev, k, t_max, dt) for k in ks], ctx.workers)
    summary = {"profile": prof.name, "t_max": t_max, "dt": dt, "modes": []}
    for k, g in zip(ks, greens):
        reg = g.regular
        ctx.csv(f"green_k{_tag(k)}.csv", ["t", "re_G", "re_G_reg", "abs_G_reg"],
                [[t, G, r, abs(r)] for t, G, r in zip(g.times, g.G, reg)])
        summary["modes"].append({
            "k": k, "nu_star": g.nu, "a_plus": g.a_plus, "a_minus": g.a_minus,
            "split_identities": g.split_identities(),
            "sup_regular": float(np.max(np.abs(reg))),
            # no fit when the regular part is at roundoff level (vacuum)
            "regular_fit": _fit_or_none(g.times, np.abs(reg), window) if np.max(np.abs(reg)) > 1e-8 else None,
        })
    _write_json(ctx.outdir / "green.json", summary)
    print(f"wrote {len(ks)} Green function series to {ctx.outdir}")
    return EXIT_OK


# ------------------------------------------------------------------ linear

def _marginal_from_config(data: dict):
    from .linear_field import InitialData, bump_marginal
    check_keys(data, {"shape", "amplitude", "power", "width", "u_support", "phi0", "phi1"}, "linear.data")
    shape = data.get("shape", "bump")
    amp = get_number(data, "amplitude", 1.0)
    us = get_number(data, "u_support", 1.0, positive=True)
    if us > 1.0:
        raise ConfigError("linear.data.u_support must lie in (0, 1]")
    if shape == "bump":
        sigma = bump_marginal(get_number(data, "power", 4, integer=True, minimum=1), amp, us)
    elif shape == "gaussian":
        w = get_number(data, "width", 0.2, positive=True)

        def sigma(u):
            u = np.asarray(u, dtype=float)
            return np.where(np.abs(u) < us, amp * np.exp(-0.5 * (u / w) ** 2), 0.0)
    elif shape == "none":
        sigma = None
    else:
        raise ConfigError(f"unknown data shape {shape!r}; choose bump, gaussian or none")
    return InitialData(sigma, us, _complex(data.get("phi0", 0.0), "phi0"), _complex(data.get("phi1", 0.0), "phi1"))


def _linear_one(args):
    from .greenfn import solve_mode_green
    from .linear_field import decompose_field
    ev, data, k, t_max, dt = args
    return decompose_field(solve_mode_green(ev, k, t_max, dt), data)


def cmd_linear(ctx: Context) -> int:
    sec = ctx.section("linear", {"data", "k", "t_max", "dt", "fit_window", "radial"})
    data = _marginal_from_config(sec.get("data") or {})
    ks = _float_list(sec, "k", [0.5, 1.0, 2.0])
    t_max = get_number(sec, "t_max", 100.0, positive=True)
    dt = get_number(sec, "dt", 0.02, positive=True)
    if abs(t_max / dt - round(t_max / dt)) > 1e-9 * t_max / dt:
        raise ConfigError("t_max must be an integer multiple of dt")
    window = _window(sec, "fit_window", [10.0, min(100.0, t_max)])
    ev, prof = ctx.evaluator()
    decs = _pmap(_linear_one, [(ev, data, k, t_max, dt) for k in ks], ctx.workers)
    summary = {"profile": prof.name, "modes": []}
    for k, d in zip(ks, decs):
        ctx.csv(f"linear_k{_tag(k)}.csv",
                ["t", "re_phi", "im_phi", "abs_phi", "abs_phi_osc", "abs_phi_reg"],
                [[t, p.real, p.imag, abs(p), abs(o), abs(r)]
                 for t, p, o, r in zip(d.times, d.total, d.oscillatory, d.regular)])
        summary["modes"].append({"k": k, "oscillatory_fit": _fit_or_none(d.times, np.abs(d.oscillatory), window),
                                 "regular_fit": _fit_or_none(d.times, np.abs(d.regular), window)})
    radial = sec.get("radial")
    if radial:
        summary["radial"] = _linear_radial(ctx, ev, radial if isinstance(radial, dict) else {})
    _write_json(ctx.outdir / "linear.json", summary)
    print(f"wrote {len(ks)} mode series to {ctx.outdir}")
    return EXIT_OK


def _linear_radial(ctx: Context, ev, rc: dict) -> dict:
    """sup-norm decay of the radial 3D field generated by Gaussian data."""
    from .dispersion import dispersion_curve
    from .linear_field import field_decay_experiment
    check_keys(rc, {"t_samples", "q_max", "n_r", "window", "kind"}, "linear.radial")
    ts = np.array(_float_list(rc, "t_samples", list(np.geomspace(10.0, 200.0, 12))))
    q_max = get_number(rc, "q_max", 6.5, positive=True)
    kind = rc.get("kind", "gradient")
    if kind not in ("gradient", "potential"):
        raise ConfigError("linear.radial.kind must be 'gradient' or 'potential'")
    window = _window(rc, "window", [10.0, 200.0])
    curve = dispersion_curve(ev, np.linspace(0.0, q_max + 0.5, int(100 * (q_max + 0.5)) + 1))
    rep = field_decay_experiment(curve, ts, ev=ev, q_max=q_max,
                                 n_r=get_number(rc, "n_r", 400, integer=True, minimum=10),
                                 window=window, kind=kind)
    ctx.csv("linear_radial.csv", ["t", "sup_oscillatory", "sup_regular"],
            [[t, a, b] for t, a, b in zip(rep.times, rep.sup_oscillatory, rep.sup_regular)])
    return {"oscillatory_exponent": rep.fit_oscillatory.exponent,
            "regular_exponent": rep.fit_regular.exponent if rep.fit_regular else None}


# -------------------------------------------------------------------- traj

def _field_from_config(ctx: Context, fc: dict):
    from .characteristics import (Mode, PowerLawEnvelope, RegularField, SyntheticField,
                                  random_mode_field, reference_decay_field)
    from .dispersion import dispersion_curve
    check_keys(fc, {"modes", "regular", "random", "reference"}, "traj.field")
    ev, _ = ctx.evaluator()
    mode_specs = fc.get("modes") or []
    k_top = max([1.6] + [float(np.linalg.norm(_vector(m.get("k"), "mode k"))) for m in mode_specs]) + 0.5
    curve = dispersion_curve(ev, np.linspace(0.0, k_top, int(100 * k_top) + 1))
    if fc.get("random"):
        rc = fc["random"] if isinstance(fc["random"], dict) else {}
        check_keys(rc, {"n_modes", "eps", "exponent", "regular_eps"}, "traj.field.random")
        rng = np.random.default_rng(ctx.seed)
        return random_mode_field(curve.nu_at, get_number(rc, "n_modes", 3, integer=True, minimum=1), rng,
                                 get_number(rc, "eps", 0.05), get_number(rc, "exponent", 1.5),
                                 get_number(rc, "regular_eps", 0.05))
    if not mode_specs and not fc.get("regular"):
        return reference_decay_field(curve.nu_at)
    modes = []
    for i, m in enumerate(mode_specs):
        check_keys(m, {"k", "branch", "amplitude", "exponent"}, f"traj.field.modes[{i}]")
        kv = _vector(m.get("k"), f"modes[{i}].k")
        branch = int(m.get("branch", 1))
        if branch not in (-1, 1):
            raise ConfigError(f"modes[{i}].branch must be +1 or -1")
        env = PowerLawEnvelope(_complex(m.get("amplitude", 0.05), "amplitude"),
                               get_number(m, "exponent", 1.5, minimum=0.0))
        modes.append(Mode(kv, float(curve.nu_at(np.linalg.norm(kv))), branch, -1j * kv, env))
    reg = None
    if fc.get("regular"):
        rg = fc["regular"]
        check_keys(rg, {"amplitude", "wavevector", "exponent", "theta"}, "traj.field.regular")
        reg = RegularField(_vector(rg.get("amplitude"), "regular.amplitude"),
                           _vector(rg.get("wavevector", [0, 0, 0]), "regular.wavevector"),
                           get_number(rg, "exponent", 3.0, minimum=0.0), get_number(rg, "theta", 0.0))
    return SyntheticField(modes, reg)


def _initial_points(sec: dict):
    if "initial_file" in sec:
        p = Path(sec["initial_file"])
        if not p.is_file():
            raise ConfigError(f"initial_file {p} does not exist")
        arr = np.loadtxt(p, delimiter=",", comments="#", ndmin=2)
        if arr.shape[1] != 6:
            raise ConfigError("initial_file rows must be x1,x2,x3,v1,v2,v3")
        return arr[:, :3], arr[:, 3:]
    if "lattice" in sec:
        lc = sec["lattice"]
        check_keys(lc, {"v_max", "n"}, "traj.lattice")
        vm = get_number(lc, "v_max", 0.5, positive=True)
        n = get_number(lc, "n", 3, integer=True, minimum=1)
        g = np.linspace(-vm, vm, n) if n > 1 else np.zeros(1)
        v = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
        return np.zeros_like(v), v
    x = np.atleast_2d(_vector(sec.get("x", [0.0, 0.0, 0.0]), "traj.x"))
    v = np.atleast_2d(_vector(sec.get("v", [0.3, 0.1, 0.0]), "traj.v"))
    return x, v


def _traj_one(args):
    from .characteristics import jacobian_check, integrate_backward, velocity_decomposition_check
    fld, x, v, t, ds = args
    dec = velocity_decomposition_check(fld, x, v, t, ds)
    jac = jacobian_check(integrate_backward(fld, x, v, t, ds))
    return dec, jac


def cmd_traj(ctx: Context) -> int:
    from .characteristics import osc_integral_identity
    sec = ctx.section("traj", {"field", "x", "v", "lattice", "initial_file", "t", "ds",
                               "dump_every", "fit_window"})
    fc = sec.get("field") or {}
    if not isinstance(fc, dict):
        raise ConfigError("traj.field must be a mapping")
    t = get_number(sec, "t", 500.0, positive=True)
    ds = get_number(sec, "ds", 0.05, positive=True)
    every = get_number(sec, "dump_every", 10, integer=True, minimum=1)
    # V^tr_{s,t} vanishes at s = t, so fits stay well inside [0, t]
    window = _window(sec, "fit_window", [10.0, max(t / 5.0, 20.0)])
    xs, vs = _initial_points(sec)
    fld = _field_from_config(ctx, fc)
    res = _pmap(_traj_one, [(fld, x, v, t, ds) for x, v in zip(xs, vs)], ctx.workers)
    rows, report = [], []
    for i, ((dec, jac), x, v) in enumerate(zip(res, xs, vs)):
        idx = list(range(0, dec.s.size, every))
        if idx[-1] != dec.s.size - 1:
            idx.append(dec.s.size - 1)
        for j in idx:
            rows.append([i, dec.s[j], *dec.V[j, 0], *dec.V_osc[j, 0], *dec.V_tr[j, 0],
                         float(np.linalg.norm(dec.residual[j, 0]))])
        s = dec.s[::-1]
        report.append({
            "point": i, "x": x, "v": v,
            "decomposition_residual": dec.max_residual,
            "osc_identity_max_error": max((osc_integral_identity(m, x, v, t) for m in fld.modes), default=0.0),
            "jacobian": {name: val for name, val in jac.items() if name != "det_dv"},
            "V_osc_fit": _fit_or_none(s, np.linalg.norm(dec.V_osc[::-1, 0], axis=-1), window),
            "V_tr_fit": _fit_or_none(s, np.linalg.norm(dec.V_tr[::-1, 0], axis=-1), window),
        })
    ctx.csv("traj.csv", ["point", "s", "V1", "V2", "V3", "Vosc1", "Vosc2", "Vosc3",
                         "Vtr1", "Vtr2", "Vtr3", "residual"], rows)
    _write_json(ctx.outdir / "traj.json", {"t": t, "ds": ds, "points": report})
    print(f"wrote {len(report)} trajectories to {ctx.outdir}")
    return EXIT_OK


# ------------------------------------------------------------------- sim1d

def cmd_sim1d(ctx: Context) -> int:
    from .nonlinear1d import Simulator, write_snapshot
    names = {f.name for f in fields(SimConfig)}
    sec = ctx.section("sim1d", names | {"snapshot_every"})
    kw = {}
    for f in fields(SimConfig):
        if f.name in sec:
            if f.type in ("str", str):
                kw[f.name] = str(sec[f.name])
            else:
                kw[f.name] = get_number(sec, f.name, f.default, integer=f.type in ("int", int))
    prof = None
    if ctx.cfg.get("profile"):
        prof = ctx.profile(dim=1)
        kw["m0"], kw["n_ions"] = prof.m0, prof.n_ions
    cfg = SimConfig(**kw)
    snap_every = get_number(sec, "snapshot_every", 0, integer=True, minimum=0)
    sim = Simulator(cfg, prof)
    n_steps = int(round(cfg.t_end / cfg.dt))
    keys = ["time", "mass", "l2", "energy", "kinetic", "field", "coupling", "sup_E", "clipped_mass"]
    header = keys + ["re_phi_mode", "im_phi_mode"]

    def row(d):
        m = d["phi_mode"][cfg.mode - 1]
        return [d[k] for k in keys] + [m.real, m.imag]

    diags = [sim.diagnostics()]
    rows = [row(diags[0])]
    snap_dir = ctx.outdir / "snapshots"
    if snap_every:
        snap_dir.mkdir(exist_ok=True)
        write_snapshot(snap_dir / "f_000000.bin", sim.state)
    for n in range(1, n_steps + 1):
        sim.step()
        if n % cfg.diag_every == 0 or n == n_steps:
            d = sim.diagnostics()
            if not np.isfinite(d["energy"]):
                raise FloatingPointError(f"non-finite energy at t = {d['time']}")
            diags.append(d)
            rows.append(row(d))
        if snap_every and n % snap_every == 0:
            write_snapshot(snap_dir / f"f_{n:06d}.bin", sim.state)
    ctx.csv("sim1d.csv", header, rows)
    e = np.array([d["energy"] for d in diags])
    m = np.array([d["mass"] for d in diags])
    l2 = np.array([d["l2"] for d in diags])
    summary = {"config": asdict(cfg), "mass_drift": float(np.max(np.abs(m - m[0])) / m[0]),
               "energy_drift": float(np.max(np.abs(e - e[0])) / abs(e[0])),
               "l2_max_increase": float(np.max(np.diff(l2))) if l2.size > 1 else 0.0,
               "clipped_mass": sim.state.clipped_mass,
               "snapshot_layout": "magic 'LKSNAP01', <qqd (nx, nv, time), f[nx, nv], phi[nx], phi_t[nx]; little-endian float64"}
    _write_json(ctx.outdir / "sim1d.json", summary)
    print(f"wrote {len(rows)} diagnostic rows to {ctx.outdir}; energy drift {summary['energy_drift']:.3g}")
    return EXIT_OK


# ------------------------------------------------------------------ verify

def cmd_verify(ctx: Context, criteria=None) -> int:
    from .acceptance import CRITERIA, result_rows, run_criteria
    sec = ctx.section("verify", {"criteria"})
    numbers = criteria or sec.get("criteria") or sorted(CRITERIA)
    try:
        numbers = [int(n) for n in numbers]
    except (TypeError, ValueError):
        raise ConfigError("criteria must be a list of integers") from None
    bad = [n for n in numbers if n not in CRITERIA]
    if bad:
        raise ConfigError(f"unknown criteria {bad}; available {sorted(CRITERIA)}")
    results = run_criteria(numbers, ctx.seed, log=print)
    ctx.csv("verify.csv", ["criterion", "check", "value", "threshold", "passed"], result_rows(results))
    ctx.csv("verify_summary.csv", ["criterion", "title", "n_checks", "passed"],
            [[r.number, r.title, len(r.checks), r.passed] for r in results])
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        raise AcceptanceFailure(f"failed criteria: {failed}")
    return EXIT_OK


COMMANDS = {"dispersion": cmd_dispersion, "green": cmd_green, "linear": cmd_linear,
            "traj": cmd_traj, "sim1d": cmd_sim1d, "verify": cmd_verify}


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="langmuir-kit", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "dispersion": "Langmuir curve, residues and Penrose margin on a k grid",
        "green": "per-mode Green functions and their regular parts",
        "linear": "linearized field for given initial data, per mode (and radial 3D)",
        "traj": "characteristics in a synthetic field with decomposition checks",
        "sim1d": "1D1V nonlinear relativistic Vlasov-Klein-Gordon simulation",
        "verify": "run the acceptance criteria and write a pass/fail table",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", help="YAML or JSON config file")
        sp.add_argument("--out", help="output directory (overrides env and config)")
        sp.add_argument("--seed", type=int, default=None, help="seed for randomized ensembles")
        sp.add_argument("--workers", type=int, default=None, help="parallel worker processes")
        if name == "verify":
            sp.add_argument("--criteria", type=int, nargs="+", help="subset of criterion numbers")
    return p


def main(argv=None) -> int:
    from .numerics import FitError, QuadratureError, RootFindingError
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        check_keys(cfg, TOP_KEYS, "top-level")
        seed = args.seed if args.seed is not None else get_number(cfg, "seed", 0, integer=True)
        workers = args.workers if args.workers is not None else get_number(cfg, "workers", 1, integer=True)
        if workers < 1:
            raise ConfigError("workers must be >= 1")
        ctx = Context(cfg, resolve_outdir(args.out, cfg), seed, workers)
        if args.command == "verify":
            return cmd_verify(ctx, args.criteria)
        return COMMANDS[args.command](ctx)
    except (ConfigError, SimulationConfigError, CFLViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ArithmeticError, QuadratureError, RootFindingError, FitError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
