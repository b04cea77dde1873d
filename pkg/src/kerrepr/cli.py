"""
Command-line entry point.

Exit codes: 0 on success, 2 for usage/configuration errors, 1 when a
computation fails.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_config, load_toml, plan_from_config, with_drive
from .entanglement import DetectionAngles, NoiseSpectrum, duan_value, optimize_angles
from .errors import KerrEPRError, ValidationError
from .fluctuations import linearize, output_spectra
from .params import TWO_PI, derived_rates
from .presets import PRESETS
from .steady_state import (
    Stage,
    classify_stages,
    max_residual,
    normalize_drive,
    oscillation_floor_power,
    stage_state,
    threshold_power,
)
from .sweeps import Axis, SweepOptions, SweepPlan, Target, emit, run_sweep, write_csv, write_json


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_drive_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma-c", type=float, help="cold-cavity pump detuning (Hz, or rad/s with --rad-s)")
    p.add_argument("--mode-l", type=int, help="signal/idler mode number l >= 1")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--a-in", type=float, help="incident pump amplitude [s^-1/2]")
    g.add_argument("--p-in", type=float, help="pump power in the bus waveguide [W]")


def _add_omega_flags(p: argparse.ArgumentParser, count: int = 121) -> None:
    p.add_argument("--f-min", type=float, help="lowest sideband frequency (Hz; default 1e-3 kappa/2pi)")
    p.add_argument("--f-max", type=float, help="highest sideband frequency (Hz; default 1e3 kappa/2pi)")
    p.add_argument("--f-count", type=int, default=count, help="number of log-spaced frequencies")


def _add_stage_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stage", default="IV", help="hysteresis stage I, II, III or IV (default IV)")


def _add_global_flags(p: argparse.ArgumentParser, default=None) -> None:
    def d(value):
        return argparse.SUPPRESS if default is argparse.SUPPRESS else value

    p.add_argument("--preset", choices=sorted(PRESETS), default=d(None), help="shipped resonator parameter set")
    p.add_argument("--config", default=d(None), help="TOML configuration file")
    p.add_argument("--set", action="append", default=d([]), metavar="KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--out", default=d(None), help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    p.add_argument("--rad-s", action="store_true", default=d(False),
                   help="angular inputs are in rad/s instead of Hz")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kerrepr", description="Kerr microresonator OPO entanglement simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(ap)
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add("steady", help="steady states with hysteresis stage labels along a pump sweep")
    _add_drive_flags(s)
    s.add_argument("--a-in-max", type=float, help="top of the a_in grid (default 2 * a_in)")
    s.add_argument("--a-in-count", type=int, default=201, help="grid points from 0 to a_in_max")
    s.add_argument("--tol", type=float, default=0.05, help="continuation jump tolerance")

    t = add("threshold", help="OPO threshold power for mode l")
    _add_drive_flags(t)
    t.add_argument("--ceiling", type=float, default=10.0, help="maximum power searched [W]")
    t.add_argument("--kind", choices=("onset", "floor"), default="onset",
                   help="onset: gain-band edge reached; floor: first above-threshold state")

    sp = add("spectrum", help="output noise spectral density matrix")
    _add_drive_flags(sp)
    _add_stage_flag(sp)
    _add_omega_flags(sp)

    du = add("duan", help="Duan value versus sideband frequency")
    _add_drive_flags(du)
    _add_stage_flag(du)
    _add_omega_flags(du)
    du.add_argument("--theta-s", type=float, help="fixed signal angle [rad] (default: optimized)")
    du.add_argument("--theta-i", type=float, help="fixed idler angle [rad] (default: optimized)")

    mr = add("map-rf", help="minimum C_s over coupling ratio and sideband frequency")
    _add_drive_flags(mr)
    _add_stage_flag(mr)
    _add_omega_flags(mr, count=61)
    mr.add_argument("--r-min", type=float, default=0.5)
    mr.add_argument("--r-max", type=float, default=2.0)
    mr.add_argument("--r-count", type=int, default=16)
    mr.add_argument("--workers", type=int, default=1)

    ma = add("map-angle", help="C_s over readout angle and sideband frequency")
    _add_drive_flags(ma)
    _add_stage_flag(ma)
    _add_omega_flags(ma, count=61)
    ma.add_argument("--phi-count", type=int, default=73, help="readout angles over [-pi, pi]")

    bw = add("bandwidth", help="entanglement bandwidth at 1/e of the C_s extremum")
    _add_drive_flags(bw)
    _add_stage_flag(bw)
    _add_omega_flags(bw)

    sw = add("sweep", help="run a sweep plan file")
    sw.add_argument("--plan", required=True, help="TOML plan (config sections plus [sweep])")
    sw.add_argument("--workers", type=int, default=1)
    return ap


# ---------------------------------------------------------------------------


def _config(args) -> RunConfig:
    data = load_toml(args.config) if args.config else None
    cfg = build_config(args.preset, data, tuple(args.set), args.rad_s)
    ang = 1.0 if args.rad_s else TWO_PI
    sigma = getattr(args, "sigma_c", None)
    return with_drive(
        cfg,
        sigma_c=None if sigma is None else sigma * ang,
        mode_l=getattr(args, "mode_l", None),
        a_in=getattr(args, "a_in", None),
        p_in=getattr(args, "p_in", None),
    )


def _omega_grid(args, kappa: float) -> np.ndarray:
    ang = 1.0 if args.rad_s else TWO_PI
    lo = args.f_min * ang if args.f_min is not None else 1e-3 * kappa
    hi = args.f_max * ang if args.f_max is not None else 1e3 * kappa
    if not (0 < lo < hi) or args.f_count < 3:
        raise ValidationError("f-min/f-max/f-count", "need 0 < f_min < f_max and f_count >= 3")
    return np.logspace(math.log10(lo), math.log10(hi), args.f_count)


def _meta(cfg: RunConfig, **extra) -> dict:
    rates = derived_rates(cfg.params)
    nd = normalize_drive(cfg.params, cfg.drive)
    meta = {
        "preset": cfg.preset,
        "kappa": rates.kappa,
        "kappa0": rates.kappa0,
        "kappa_ex": rates.kappa_ex,
        "eta": rates.eta,
        "f": nd.f,
        "zeta0": nd.zeta0,
        "delta_l": nd.delta_l,
        "sigma_c_hz": cfg.drive.sigma_c / TWO_PI,
        "mode_l": cfg.drive.mode_l,
        "a_in": cfg.drive.amplitude(cfg.params),
    }
    meta.update(extra)
    return meta


def _table(args, columns, rows, meta) -> bytes:
    if args.format == "csv":
        return write_csv(columns, rows)
    return write_json({"meta": meta, "columns": columns, "records": rows})


def _state(cfg: RunConfig, stage: str):
    ss = stage_state(cfg.params, cfg.drive, Stage.parse(stage))
    nd = normalize_drive(cfg.params, cfg.drive)
    return ss, nd, linearize(cfg.params, nd, ss)


def cmd_steady(args, cfg):
    a_in = cfg.drive.amplitude(cfg.params)
    top = args.a_in_max if args.a_in_max is not None else 2.0 * a_in
    if not top > 0 or args.a_in_count < 2:
        raise ValidationError("a-in-max", "need a positive grid maximum and >= 2 points")
    grid = np.linspace(0.0, top, args.a_in_count)
    table = classify_stages(cfg.params, cfg.drive.sigma_c, cfg.drive.mode_l, grid, tol=args.tol)
    unit = normalize_drive(cfg.params, with_drive(cfg, a_in=1.0).drive)
    rows = []
    for a, entries in table:
        nd = unit.with_f(unit.f * a)
        for s in entries:
            rows.append({"a_in": a, "stage": s.stage.value, "a_p": s.a_p, "a_si": s.a_si,
                         "theta": s.theta_cap, "psi": s.psi, "residual": max_residual(s, nd)})
    cols = ["a_in", "stage", "a_p", "a_si", "theta", "psi", "residual"]
    above = [r for r in rows if r["a_si"] > 0 and r["stage"] != "UNSTABLE"]
    summary = f"{len(grid)} drive points, {len(rows)} labelled states; {len(above)} stable above-threshold states."
    return _table(args, cols, rows, _meta(cfg, a_in_max=top)), summary


def cmd_threshold(args, cfg):
    fn = threshold_power if args.kind == "onset" else oscillation_floor_power
    p_th = fn(cfg.params, cfg.drive.sigma_c, cfg.drive.mode_l, ceiling=args.ceiling)
    from scipy.constants import hbar
    a_th = math.sqrt(p_th / (hbar * (cfg.params.omega0 - cfg.drive.sigma_c)))
    rows = [{"sigma_c_hz": cfg.drive.sigma_c / TWO_PI, "mode_l": cfg.drive.mode_l, "kind": args.kind,
             "p_th_w": p_th, "a_in_th": a_th}]
    return (_table(args, ["sigma_c_hz", "mode_l", "kind", "p_th_w", "a_in_th"], rows, _meta(cfg)),
            f"threshold ({args.kind}) for l={cfg.drive.mode_l}: {p_th:.6g} W (A_in = {a_th:.6g}).")


def cmd_spectrum(args, cfg):
    ss, nd, lin = _state(cfg, args.stage)
    w = _omega_grid(args, lin.kappa)
    spectra = output_spectra(lin, w)
    cols = ["omega_hz"]
    for r in range(4):
        for c in range(4):
            cols += [f"re_s{r + 1}{c + 1}", f"im_s{r + 1}{c + 1}"]
    if args.format == "json":
        recs = [{"omega_hz": float(x / TWO_PI), "s_a": [[[z.real, z.imag] for z in row] for row in s]}
                for x, s in zip(w, spectra)]
        data = write_json({"meta": _meta(cfg, stage=ss.stage.value), "records": recs})
    else:
        rows = []
        for x, s in zip(w, spectra):
            row = {"omega_hz": x / TWO_PI}
            for r in range(4):
                for c in range(4):
                    row[f"re_s{r + 1}{c + 1}"] = s[r, c].real
                    row[f"im_s{r + 1}{c + 1}"] = s[r, c].imag
            rows.append(row)
        data = write_csv(cols, rows)
    return data, f"stage {ss.stage.value} spectrum at {len(w)} frequencies (max drift growth {lin.max_growth() / lin.kappa:.3g} kappa)."


def cmd_duan(args, cfg):
    ss, nd, lin = _state(cfg, args.stage)
    w = _omega_grid(args, lin.kappa)
    fixed = args.theta_s is not None or args.theta_i is not None
    if fixed and (args.theta_s is None or args.theta_i is None):
        raise ValidationError("theta-s/theta-i", "give both angles or neither")
    rows = []
    for x, s in zip(w, output_spectra(lin, w)):
        spec = NoiseSpectrum(float(x), s)
        pt = duan_value(spec, DetectionAngles(args.theta_s, args.theta_i)) if fixed else optimize_angles(spec)
        rows.append({"f_hz": x / TWO_PI, "cs": pt.c_s, "theta_s": pt.angles.theta_s, "theta_i": pt.angles.theta_i,
                     "phi": pt.angles.phi, "dx_minus_sq": pt.dx_minus_sq, "dy_plus_sq": pt.dy_plus_sq})
    best = min(rows, key=lambda r: r["cs"])
    cols = ["f_hz", "cs", "theta_s", "theta_i", "phi", "dx_minus_sq", "dy_plus_sq"]
    return (_table(args, cols, rows, _meta(cfg, stage=ss.stage.value)),
            f"extremal C_s = {best['cs']:.6g} at f = {best['f_hz']:.6g} Hz"
            + (" (entangled)." if best["cs"] < -1e-9 else " (no entanglement)."))


def _plan_output(args, plan, workers=1):
    result = run_sweep(plan, workers=workers)
    return result, emit(result, args.format)


def cmd_map_rf(args, cfg):
    kappa = derived_rates(cfg.params).kappa
    w = _omega_grid(args, kappa)
    axes = (
        Axis("r", "linear", args.r_min, args.r_max, args.r_count),
        Axis("omega", "log", float(w[0]), float(w[-1]), len(w)),
    )
    plan = SweepPlan(axes, Target.MAP_RF, Stage.parse(args.stage), cfg.params, cfg.drive, preset=cfg.preset)
    result, data = _plan_output(args, plan, args.workers)
    vals = [r["cs_min"] for r in result.records if r["cs_min"] is not None]
    ext = f"extremal C_s = {min(vals):.6g}" if vals else "no cells evaluated"
    return data, f"{len(result.records)} cells, {len(result.diagnostics)} absent/failed; {ext}."


def cmd_map_angle(args, cfg):
    kappa = derived_rates(cfg.params).kappa
    w = _omega_grid(args, kappa)
    axes = (
        Axis("omega", "log", float(w[0]), float(w[-1]), len(w)),
        Axis("phi", "linear", -math.pi, math.pi, args.phi_count),
    )
    plan = SweepPlan(axes, Target.MAP_ANGLE, Stage.parse(args.stage), cfg.params, cfg.drive, preset=cfg.preset)
    result, data = _plan_output(args, plan)
    vals = [r["cs"] for r in result.records]
    return data, f"{len(result.records)} cells; extremal C_s = {min(vals):.6g}." if vals else "no cells."


def cmd_bandwidth(args, cfg):
    kappa = derived_rates(cfg.params).kappa
    w = _omega_grid(args, kappa)
    opts = SweepOptions(omega_lo=float(w[0] / kappa), omega_hi=float(w[-1] / kappa), omega_count=len(w))
    plan = SweepPlan((), Target.BANDWIDTH, Stage.parse(args.stage), cfg.params, cfg.drive, opts, cfg.preset)
    result, data = _plan_output(args, plan)
    if not result.records:
        raise _CellFailure(result.diagnostics[0]["message"])
    r = result.records[0]
    clip = " (edge-clipped)" if r["edge_clipped"] else ""
    return data, (f"bandwidth {r['bandwidth_hz']:.6g} Hz{clip} around f* = {r['f_star_hz']:.6g} Hz, "
                  f"extremal C_s = {r['cs_star']:.6g}.")


def cmd_sweep(args, cfg):
    data = load_toml(args.plan)
    if args.config:
        base = load_toml(args.config)
        base.update({k: v for k, v in data.items()})
        data = base
    plan_cfg = build_config(args.preset, data, tuple(args.set), args.rad_s)
    plan = plan_from_config(plan_cfg, args.rad_s)
    result, out = _plan_output(args, plan, args.workers)
    return out, f"{plan.target.value}: {len(result.records)} records, {len(result.diagnostics)} absent/failed cells."


class _CellFailure(KerrEPRError):
    pass


COMMANDS = {
    "steady": cmd_steady,
    "threshold": cmd_threshold,
    "spectrum": cmd_spectrum,
    "duan": cmd_duan,
    "map-rf": cmd_map_rf,
    "map-angle": cmd_map_angle,
    "bandwidth": cmd_bandwidth,
    "sweep": cmd_sweep,
}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        cfg = None if args.command == "sweep" else _config(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValidationError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        data, summary = COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except KerrEPRError as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    print(summary, file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
