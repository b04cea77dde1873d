"""
Configuration files, presets and ``key=value`` overrides.

Config files are TOML with optional top-level ``preset`` and sections
``[resonator]``, ``[pump]`` and ``[sweep]`` (axes as ``[[sweep.axes]]``).
Angular inputs (``d2``, ``sigma_c``, omega axes) are read in Hz and
multiplied by exactly 2*pi unless ``rad_s`` is set; ``eta`` is always in
rad/s.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ValidationError
from .params import TWO_PI, PumpDrive, ResonatorParams
from .presets import DEFAULT_DRIVES, PRESETS
from .steady_state import Stage
from .sweeps import AXIS_NAMES, Axis, SweepOptions, SweepPlan, Target

RESONATOR_KEYS = tuple(f.name for f in fields(ResonatorParams))
PUMP_KEYS = ("sigma_c", "mode_l", "p_in", "a_in")
ANGULAR_KEYS = {"d2", "sigma_c"}
ANGULAR_AXES = {"sigma_c", "omega"}


class ConfigError(ValidationError):
    """Unknown key, preset or malformed value in user configuration."""


@dataclass(frozen=True)
class RunConfig:
    preset: Optional[str]
    params: ResonatorParams
    drive: PumpDrive
    overrides: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)


def _to_internal(key: str, value, rad_s: bool):
    if value is None:
        return None
    if key == "mode_l":
        v = float(value)
        if v != int(v):
            raise ConfigError("mode_l", f"must be an integer, got {value!r}")
        return int(v)
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}") from None
    if key in ANGULAR_KEYS and not rad_s:
        v *= TWO_PI
    return v


def _resolve_key(key: str) -> tuple:
    """Map a flat or dotted key to (section, name)."""
    parts = key.strip().split(".")
    if len(parts) == 2:
        section, name = parts
        if section == "resonator" and name in RESONATOR_KEYS:
            return section, name
        if section == "pump" and name in PUMP_KEYS:
            return section, name
    elif len(parts) == 1:
        name = parts[0]
        if name in PUMP_KEYS:
            return "pump", name
        if name in RESONATOR_KEYS:
            return "resonator", name
    raise ConfigError("set", f"unknown configuration key {key!r}")


def parse_assignment(text: str) -> tuple:
    if "=" not in text:
        raise ConfigError("set", f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    v = v.strip()
    return k.strip(), (None if v.lower() in ("", "none", "null") else v)


def load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None


def build_config(
    preset: Optional[str] = None,
    data: Optional[dict] = None,
    sets: tuple = (),
    rad_s: bool = False,
) -> RunConfig:
    """Expand preset, then file values, then ``--set`` overrides (last write wins)."""
    data = dict(data or {})
    unknown = set(data) - {"preset", "resonator", "pump", "sweep"}
    if unknown:
        raise ConfigError("config", f"unknown section(s): {', '.join(sorted(unknown))}")
    name = preset if preset is not None else data.get("preset")
    res = {}
    pump = {}
    if name is not None:
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
        base = PRESETS[name]
        res = {f.name: getattr(base, f.name) for f in fields(ResonatorParams)}
        d = DEFAULT_DRIVES[name]
        pump = {"sigma_c": d.sigma_c, "mode_l": d.mode_l, "a_in": d.a_in, "p_in": d.p_in}

    overrides = {}
    for section, target, keys in (("resonator", res, RESONATOR_KEYS), ("pump", pump, PUMP_KEYS)):
        for k, v in (data.get(section) or {}).items():
            if k not in keys:
                raise ConfigError(section, f"unknown key {k!r}")
            _assign(target, k, v, rad_s)
            overrides[f"{section}.{k}"] = v
    for text in sets:
        k, v = parse_assignment(text)
        section, n = _resolve_key(k)
        _assign(res if section == "resonator" else pump, n, v, rad_s)
        overrides[f"{section}.{n}"] = v

    missing = [k for k in ("f0", "fsr", "d2", "q0", "r", "radius", "a_eff") if res.get(k) is None]
    if missing:
        raise ConfigError("resonator", f"missing value(s): {', '.join(missing)} (use --preset or a config file)")
    if pump.get("sigma_c") is None:
        raise ConfigError("pump", "missing sigma_c")
    if pump.get("a_in") is None and pump.get("p_in") is None:
        raise ConfigError("pump", "one of a_in / p_in is required")
    params = ResonatorParams(**{k: v for k, v in res.items() if v is not None or k in ("eta", "gap")})
    drive = PumpDrive(**{k: v for k, v in pump.items() if v is not None})
    return RunConfig(preset=name, params=params, drive=drive, overrides=overrides, sweep=dict(data.get("sweep") or {}))


def _assign(target: dict, key: str, value, rad_s: bool) -> None:
    if key == "gap":
        target[key] = None if value is None else float(value)
        return
    target[key] = _to_internal(key, value, rad_s)
    # the two drive representations are exclusive; the latest write wins
    if key == "a_in":
        target["p_in"] = None
    elif key == "p_in":
        target["a_in"] = None


def axis_from_dict(d: dict, rad_s: bool = False) -> Axis:
    try:
        name = d["name"]
        lo, hi = float(d["min"]), float(d["max"])
        count = int(d.get("count", 1))
    except KeyError as exc:
        raise ConfigError("axes", f"axis entry missing {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise ConfigError("axes", f"malformed axis entry {d!r}") from None
    if name not in AXIS_NAMES:
        raise ConfigError("axes", f"unknown parameter {name!r}; allowed: {', '.join(AXIS_NAMES)}")
    if name in ANGULAR_AXES and not rad_s:
        lo, hi = lo * TWO_PI, hi * TWO_PI
    return Axis(name=name, spacing=str(d.get("spacing", "linear")), lo=lo, hi=hi, count=count)


def plan_from_config(cfg: RunConfig, rad_s: bool = False) -> SweepPlan:
    sw = dict(cfg.sweep)
    if "target" not in sw:
        raise ConfigError("sweep", "missing target")
    known = {"target", "stage", "axes"} | {f.name for f in fields(SweepOptions)}
    unknown = set(sw) - known
    if unknown:
        raise ConfigError("sweep", f"unknown key(s): {', '.join(sorted(unknown))}")
    opts = {f.name: sw[f.name] for f in fields(SweepOptions) if f.name in sw}
    for k in ("omega_count", "angle_grid", "threshold_l"):
        if k in opts:
            opts[k] = int(opts[k])
    for k in ("omega_lo", "omega_hi", "ceiling"):
        if k in opts:
            opts[k] = float(opts[k])
    axes = tuple(axis_from_dict(a, rad_s) for a in sw.get("axes", []))
    return SweepPlan(
        axes=axes,
        target=Target.parse(sw["target"]),
        stage=Stage.parse(sw.get("stage", "IV")),
        params=cfg.params,
        drive=cfg.drive,
        options=SweepOptions(**opts),
        preset=cfg.preset,
    )


def with_drive(cfg: RunConfig, **changes) -> RunConfig:
    d = {k: v for k, v in changes.items() if v is not None}
    if not d:
        return cfg
    if "a_in" in d:
        d["p_in"] = None
    elif "p_in" in d:
        d["a_in"] = None
    if math.isnan(float(d.get("sigma_c", 0.0))):
        raise ConfigError("sigma_c", "must be finite")
    return replace(cfg, drive=replace(cfg.drive, **d))
