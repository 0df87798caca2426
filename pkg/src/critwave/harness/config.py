"""Flat ``key = value`` configuration files.

Lines are ``key = value``; ``#`` starts a comment; ``[name]`` opens a
section whose keys override the keys above the first section.  Floats are
parsed as 64-bit.  Sweep files use sections, one per run.
"""

from __future__ import annotations

import math
from pathlib import Path

from ..errors import ConfigError
from ..modcont import CriticalPair, parse_modulus
from ..solver import PROFILES, SimConfig
from .curve import curve_qc

FLOAT_KEYS = {"p_c", "q_c", "amplitude", "radius", "dt", "T_max", "blowup_threshold", "probe_start",
              "L", "eps0", "ell_eps", "snapshot_every"}
INT_KEYS = {"n", "probe_count", "N", "seed"}
BOOL_KEYS = {"clamp", "nonlinear"}
STR_KEYS = {"mu1", "mu2", "profile", "slots"}
SIM_KEYS = FLOAT_KEYS | INT_KEYS | BOOL_KEYS | STR_KEYS


def parse_text(text: str) -> tuple[dict, dict]:
    """(base keys, {section: keys}) with values left as strings."""
    base: dict = {}
    sections: dict = {}
    cur = base
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name or name in sections:
                raise ConfigError(f"line {lineno}: empty or repeated section [{name}]")
            cur = sections[name] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in cur:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        cur[key] = value
    return base, sections


def read_config(path) -> tuple[dict, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_text(text)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _typed(key: str, value: str):
    try:
        if key in FLOAT_KEYS:
            x = float(value)
            if math.isnan(x):
                raise ValueError
            return x
        if key in INT_KEYS:
            return int(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if key in BOOL_KEYS:
        return _bool(value)
    return value


def sim_config(keys: dict) -> SimConfig:
    """Build a SimConfig; q_c is solved from the curve when omitted."""
    unknown = set(keys) - SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    vals = {k: _typed(k, v) for k, v in keys.items()}
    for req in ("n", "p_c", "mu1", "mu2"):
        if req not in vals:
            raise ConfigError(f"missing key {req!r}")
    try:
        if "q_c" in vals:
            pair = CriticalPair(vals.pop("n"), vals.pop("p_c"), vals.pop("q_c"))
        else:
            pair = curve_qc(vals.pop("n"), vals.pop("p_c"))
        mu1 = parse_modulus(vals.pop("mu1"))
        mu2 = parse_modulus(vals.pop("mu2"))
        if "slots" in vals:
            parts = [float(x) for x in vals["slots"].split(",")]
            if len(parts) != 4:
                raise ConfigError("slots needs four comma-separated weights")
            vals["slots"] = tuple(parts)
        if vals.get("profile", "gaussian") not in PROFILES:
            raise ConfigError(f"profile must be one of {PROFILES}")
        return SimConfig(pair, mu1, mu2, **vals)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_sim_config(path) -> SimConfig:
    base, sections = read_config(path)
    if sections:
        raise ConfigError("a single-run config has no sections")
    return sim_config(base)


def load_sweep(path) -> list[tuple[str, SimConfig]]:
    base, sections = read_config(path)
    if not sections:
        raise ConfigError("a sweep config needs at least one [run] section")
    return [(name, sim_config({**base, **keys})) for name, keys in sections.items()]
