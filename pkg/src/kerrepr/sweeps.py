"""
Multi-parameter studies over resonator and drive settings.

A plan declares axes (each a linear or logarithmic grid over a whitelisted
parameter), a target quantity, and the base configuration the axes perturb.
Cells are evaluated in a process pool in independent groups; results are
reassembled in row-major axis order so the emitted bytes do not depend on
scheduling.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .entanglement import (
    NoiseSpectrum,
    entanglement_bandwidth,
    min_over_theta_i,
    optimize_angles,
)
from .errors import KerrEPRError, StageAbsentError, ValidationError
from .fluctuations import default_omega_grid, linearize, output_spectra
from .params import TWO_PI, PumpDrive, ResonatorParams, derived_rates
from .steady_state import (
    Stage,
    max_residual,
    normalize_drive,
    stage_state,
    threshold_power,
)

AXIS_NAMES = ("q0", "r", "sigma_c", "a_in", "p_in", "mode_l", "omega", "phi")
SPECTRAL_AXES = ("omega", "phi")
# angular axes are reported in Hz under these column names
COLUMN_NAMES = {"omega": "f_hz", "sigma_c": "sigma_c_hz", "phi": "phi_rad"}


class Target(str, Enum):
    STEADY = "STEADY"
    THRESHOLD = "THRESHOLD"
    MAP_RF = "MAP_RF"
    MAP_ANGLE = "MAP_ANGLE"
    BANDWIDTH = "BANDWIDTH"
    QSWEEP = "QSWEEP"

    @classmethod
    def parse(cls, name: str) -> "Target":
        try:
            return cls(str(name).strip().upper().replace("-", "_"))
        except ValueError:
            raise ValidationError("target", f"unknown target {name!r}") from None


OUTPUTS = {
    Target.STEADY: ("stage", "a_p", "a_si", "theta", "psi", "residual"),
    Target.THRESHOLD: ("p_th_w",),
    Target.MAP_RF: ("cs_min", "theta_s", "theta_i"),
    Target.MAP_ANGLE: ("cs", "theta_i"),
    Target.BANDWIDTH: ("bandwidth_hz", "f_star_hz", "cs_star", "edge_clipped"),
    Target.QSWEEP: ("bandwidth_hz", "cs_star", "p_th_w", "edge_clipped"),
}

REQUIRED_AXES = {
    Target.MAP_RF: ("omega",),
    Target.MAP_ANGLE: ("omega", "phi"),
}


@dataclass(frozen=True)
class Axis:
    """One swept parameter; values in internal units (rad/s for angular ones)."""

    name: str
    spacing: str
    lo: float
    hi: float
    count: int

    def __post_init__(self) -> None:
        if self.name not in AXIS_NAMES:
            raise ValidationError("axes", f"unknown parameter {self.name!r}; allowed: {', '.join(AXIS_NAMES)}")
        if self.spacing not in ("linear", "log"):
            raise ValidationError("axes", f"{self.name}: spacing must be 'linear' or 'log'")
        if int(self.count) != self.count or self.count < 1:
            raise ValidationError("axes", f"{self.name}: count must be an integer >= 1")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValidationError("axes", f"{self.name}: bounds must be finite")
        if self.spacing == "log" and not (self.lo > 0 and self.hi > 0):
            raise ValidationError("axes", f"{self.name}: log axes require min > 0")
        if self.count == 1 and self.lo != self.hi:
            raise ValidationError("axes", f"{self.name}: count 1 requires min == max")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([float(self.lo)])
        if self.spacing == "log":
            return np.logspace(math.log10(self.lo), math.log10(self.hi), int(self.count))
        return np.linspace(self.lo, self.hi, int(self.count))

    @property
    def column(self) -> str:
        return COLUMN_NAMES.get(self.name, self.name)


@dataclass(frozen=True)
class SweepOptions:
    """Target-specific knobs.

    ``omega_lo`` / ``omega_hi`` are in units of kappa and define the
    sideband grid for BANDWIDTH and QSWEEP.
    """

    omega_lo: float = 1e-3
    omega_hi: float = 1e3
    omega_count: int = 121
    angle_grid: int = 64
    threshold_l: int = 1
    ceiling: float = 1e4


@dataclass(frozen=True)
class SweepPlan:
    axes: tuple
    target: Target
    stage: Stage
    params: ResonatorParams
    drive: PumpDrive
    options: SweepOptions = field(default_factory=SweepOptions)
    preset: Optional[str] = None

    def __post_init__(self) -> None:
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValidationError("axes", "duplicate axis names")
        if "a_in" in names and "p_in" in names:
            raise ValidationError("axes", "a_in and p_in cannot both be swept")
        for req in REQUIRED_AXES.get(self.target, ()):
            if req not in names:
                raise ValidationError("axes", f"target {self.target.value} needs a {req!r} axis")
        allowed_spectral = {Target.MAP_RF: {"omega"}, Target.MAP_ANGLE: {"omega", "phi"}}.get(self.target, set())
        for n in names:
            if n in SPECTRAL_AXES and n not in allowed_spectral:
                raise ValidationError("axes", f"axis {n!r} is not used by target {self.target.value}")

    @property
    def shape(self) -> tuple:
        return tuple(int(a.count) for a in self.axes)

    def to_dict(self) -> dict:
        return {
            "axes": [asdict(a) for a in self.axes],
            "target": self.target.value,
            "stage": self.stage.value,
            "params": asdict(self.params),
            "drive": asdict(self.drive),
            "options": asdict(self.options),
            "preset": self.preset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepPlan":
        return cls(
            axes=tuple(Axis(**a) for a in d["axes"]),
            target=Target.parse(d["target"]),
            stage=Stage.parse(d["stage"]),
            params=ResonatorParams(**d["params"]),
            drive=PumpDrive(**d["drive"]),
            options=SweepOptions(**d["options"]),
            preset=d.get("preset"),
        )


@dataclass(frozen=True)
class SweepResult:
    plan: SweepPlan
    records: list
    diagnostics: list

    @property
    def columns(self) -> list:
        return [a.column for a in self.plan.axes] + list(OUTPUTS[self.plan.target]) + ["status"]

    def to_dict(self) -> dict:
        return {"plan": self.plan.to_dict(), "records": self.records, "diagnostics": self.diagnostics}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        return cls(plan=SweepPlan.from_dict(d["plan"]), records=list(d["records"]), diagnostics=list(d["diagnostics"]))


# ---------------------------------------------------------------------------
# evaluation


def apply_values(p: ResonatorParams, d: PumpDrive, values: dict):
    """Return (params, drive) with swept scalar parameters substituted."""
    pk = {k: float(values[k]) for k in ("q0", "r") if k in values}
    dk = {}
    if "sigma_c" in values:
        dk["sigma_c"] = float(values["sigma_c"])
    if "mode_l" in values:
        dk["mode_l"] = int(round(values["mode_l"]))
    if "a_in" in values:
        dk.update(a_in=float(values["a_in"]), p_in=None)
    if "p_in" in values:
        dk.update(p_in=float(values["p_in"]), a_in=None)
    return (replace(p, **pk) if pk else p), (replace(d, **dk) if dk else d)


def _out_value(name: str, value):
    """Column value in output units."""
    if name in ("omega", "sigma_c"):
        return float(value) / TWO_PI
    if name == "mode_l":
        return int(round(value))
    return float(value)


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _group_outputs(plan: SweepPlan, values: dict, spectral: list) -> list:
    """Evaluate one configuration; returns a (status, message, outputs) per spectral cell."""
    p, d = apply_values(plan.params, plan.drive, values)
    t = plan.target
    opt = plan.options
    if t is Target.THRESHOLD:
        return [{"p_th_w": threshold_power(p, d.sigma_c, d.mode_l, ceiling=opt.ceiling)}]

    ss = stage_state(p, d, plan.stage)
    nd = normalize_drive(p, d)
    if t is Target.STEADY:
        return [
            {
                "stage": ss.stage.value,
                "a_p": ss.a_p,
                "a_si": ss.a_si,
                "theta": ss.theta_cap,
                "psi": ss.psi,
                "residual": max_residual(ss, nd),
            }
        ]
    lin = linearize(p, nd, ss)
    if t is Target.MAP_RF:
        omegas = np.array([s["omega"] for s in spectral])
        spectra = output_spectra(lin, omegas)
        out = []
        for w, s in zip(omegas, spectra):
            pt = optimize_angles(NoiseSpectrum(float(w), s), grid=opt.angle_grid)
            out.append({"cs_min": pt.c_s, "theta_s": pt.angles.theta_s, "theta_i": pt.angles.theta_i})
        return out
    if t is Target.MAP_ANGLE:
        omegas = sorted({s["omega"] for s in spectral})
        spectra = dict(zip(omegas, output_spectra(lin, omegas)))
        out = []
        for s in spectral:
            cs, th = min_over_theta_i(spectra[s["omega"]], s["phi"], opt.angle_grid)
            out.append({"cs": cs, "theta_i": th})
        return out
    grid = default_omega_grid(lin.kappa, opt.omega_count, opt.omega_lo, opt.omega_hi)
    bw = entanglement_bandwidth(lin, grid, grid=opt.angle_grid)
    row = {"bandwidth_hz": bw.width_hz, "cs_star": bw.cs_star, "edge_clipped": bw.edge_clipped}
    if t is Target.BANDWIDTH:
        row["f_star_hz"] = bw.f_star_hz
        return [row]
    try:
        row["p_th_w"] = threshold_power(p, d.sigma_c, opt.threshold_l, ceiling=opt.ceiling)
    except KerrEPRError:
        row["p_th_w"] = None
    return [row]


def _evaluate_group(job):
    plan, values, spectral = job
    n = max(len(spectral), 1)
    try:
        outs = _group_outputs(plan, values, spectral)
        return [("ok", "", o) for o in outs]
    except StageAbsentError as exc:
        return [("absent-stage", str(exc), None)] * n
    except KerrEPRError as exc:
        return [("error", f"{type(exc).__name__}: {exc}", None)] * n


def run_sweep(plan: SweepPlan, workers: int = 1) -> SweepResult:
    """Evaluate every cell of ``plan``.

    Cells sharing all non-spectral axis values share one steady state and
    linearization. Output order is row-major over the declared axes.
    """
    axes = plan.axes
    grids = [a.values() for a in axes]
    cells = list(itertools.product(*[range(len(g)) for g in grids]))
    spectral_pos = [k for k, a in enumerate(axes) if a.name in SPECTRAL_AXES]
    config_pos = [k for k, a in enumerate(axes) if a.name not in SPECTRAL_AXES]

    groups = {}
    for idx in cells:
        key = tuple(idx[k] for k in config_pos)
        groups.setdefault(key, []).append(idx)
    keys = list(groups)
    jobs = []
    for key in keys:
        values = {axes[k].name: grids[k][i] for k, i in zip(config_pos, key)}
        spectral = [{axes[k].name: grids[k][idx[k]] for k in spectral_pos} for idx in groups[key]]
        jobs.append((plan, values, spectral))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_group, jobs))
    else:
        results = [_evaluate_group(j) for j in jobs]

    by_cell = {}
    for key, res in zip(keys, results):
        for idx, r in zip(groups[key], res):
            by_cell[idx] = r

    outputs = OUTPUTS[plan.target]
    records, diagnostics = [], []
    for idx in cells:
        status, message, out = by_cell[idx]
        axis_vals = {axes[k].column: _out_value(axes[k].name, grids[k][i]) for k, i in enumerate(idx)}
        if status != "ok":
            diagnostics.append({"cell": list(idx), "values": axis_vals, "status": status, "message": message})
            continue
        rec = dict(axis_vals)
        for name in outputs:
            v = out.get(name)
            rec[name] = v if isinstance(v, (bool, str)) or v is None else _finite(v)
        rec["status"] = "ok"
        records.append(rec)
    return SweepResult(plan=plan, records=records, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# serialization


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else format(float(v), ".17g")
    return str(v)


def write_csv(columns: list, rows: list) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])
    return buf.getvalue().encode("utf-8")


def _json_clean(obj):
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(obj) -> bytes:
    """JSON with shortest round-trip float repr; non-finite values become null."""
    return (json.dumps(_json_clean(obj), indent=2, sort_keys=False, allow_nan=False) + "\n").encode("utf-8")


def emit(result: SweepResult, fmt: str = "csv") -> bytes:
    fmt = fmt.lower()
    if fmt == "csv":
        return write_csv(result.columns, result.records)
    if fmt == "json":
        return write_json(result.to_dict())
    raise ValidationError("format", f"unknown format {fmt!r}")


def parse_json(data: bytes) -> SweepResult:
    return SweepResult.from_dict(json.loads(data.decode("utf-8")))


def default_kappa(p: ResonatorParams) -> float:
    return derived_rates(p).kappa
