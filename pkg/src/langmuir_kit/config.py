"""Run configuration loading, hashing and CSV output."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

OUTDIR_ENV = "LANGMUIR_KIT_OUTDIR"


class ConfigError(ValueError):
    """The run configuration is missing, unreadable or invalid."""


def load_config(path) -> dict:
    """Read a YAML or JSON mapping; an absent path gives an empty config."""
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    text = p.read_text()
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            import yaml
            data = yaml.safe_load(text)
    except Exception as exc:  # parser errors of either format
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p} must contain a mapping at top level")
    return data


def check_keys(cfg: dict, allowed, where: str) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} keys: {unknown}; allowed: {sorted(allowed)}")


def get_number(cfg: dict, key: str, default, *, positive=False, integer=False, minimum=None):
    val = cfg.get(key, default)
    try:
        val = int(val) if integer else float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {val!r}") from None
    if integer and float(cfg.get(key, default)) != val:
        raise ConfigError(f"{key} must be an integer")
    if positive and not val > 0:
        raise ConfigError(f"{key} must be positive, got {val}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {val}")
    return val


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def resolve_outdir(cli_value=None, cfg: dict | None = None) -> Path:
    """--out beats the environment variable, which beats the config, then ./out."""
    if cli_value:
        out = Path(cli_value)
    elif os.environ.get(OUTDIR_ENV):
        out = Path(os.environ[OUTDIR_ENV])
    elif cfg and cfg.get("output_dir"):
        out = Path(cfg["output_dir"])
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows, cfg_hash: str, seed=None) -> Path:
    """CSV with a leading comment carrying the config hash; floats at 17 significant digits."""
    path = Path(path)
    lines = [f"# config_sha256={cfg_hash}" + (f" seed={seed}" if seed is not None else "")]
    lines.append(",".join(header))
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row length does not match header")
        lines.append(",".join(format_value(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path
