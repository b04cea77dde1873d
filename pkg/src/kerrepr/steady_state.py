"""
Classical mean-field steady states of the degenerate-pair Kerr OPO.

Normalization
-------------
Time is measured in units of 1/kappa and field amplitudes as
``a~ = sqrt(eta/kappa) * alpha``, so the Kerr shift per unit ``|a~|^2`` equals
one linewidth. In these units the pump, signal and idler obey::

    dp/dt = i(|p|^2 + 2|s|^2 + 2|i|^2) p + 2i conj(p) s i - (1 + i zeta0) p + F
    ds/dt = i(2|p|^2 + |s|^2 + 2|i|^2) s + i p^2 conj(i) - (1 + i delta_l) s

and the idler equation is the signal one with s and i swapped. With
``p = A_p e^{i theta_p}``, ``s = A e^{i theta_s}``, ``i = A e^{i theta_i}``,
``x = A_p^2``, ``v = A^2``, ``Theta = theta_s + theta_i - 2 theta_p`` and
``psi = -theta_p`` (real input field) a steady state satisfies::

    (1) x^2 = 1 + (delta_l - 2x - 3v)^2
    (2) f^2 = x (1 + 2v/x)^2 + x (zeta0 - x - 2(v/x)(delta_l - 3v))^2
    (3) x sin(Theta) = 1
    (4) x cos(Theta) = delta_l - 2x - 3v
    (5) f cos(psi) = A_p (1 + 2v/x)
    (6) f sin(psi) = A_p (zeta0 - x - 2(v/x)(delta_l - 3v))

Only (2), (5) and (6) constrain a state with ``v = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.optimize import brentq

from .errors import (
    ContinuationError,
    StageAbsentError,
    SteadyStateError,
    ThresholdError,
    ValidationError,
)
from .params import PumpDrive, ResonatorParams, cold_detuning, derived_rates

SQRT3 = math.sqrt(3.0)
RESIDUAL_TOL = 1e-9
MERGE_TOL = 1e-8
STABILITY_TOL = 1e-7
DEFAULT_CEILING_W = 10.0


class Stage(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    UNSTABLE = "UNSTABLE"

    @classmethod
    def parse(cls, name: str) -> "Stage":
        try:
            return cls(str(name).strip().upper())
        except ValueError:
            raise ValidationError("stage", f"unknown stage {name!r}") from None


@dataclass(frozen=True)
class NormalizedDrive:
    """Drive and detunings in linewidth units.

    ``zeta0 = sigma_c / kappa``, ``delta_l = Delta_l / kappa`` and
    ``d3_over_2 = delta_l - zeta0`` (the dispersion shift of mode l).
    """

    f: float
    zeta0: float
    delta_l: float
    d3_over_2: float

    def __post_init__(self) -> None:
        if not (self.f >= 0 and math.isfinite(self.f)):
            raise ValidationError("f", f"must be >= 0, got {self.f!r}")
        if abs(self.delta_l - (self.zeta0 + self.d3_over_2)) > 1e-9 * max(1.0, abs(self.delta_l)):
            raise ValidationError("delta_l", "must equal zeta0 + d3_over_2")

    def with_f(self, f: float) -> "NormalizedDrive":
        return replace(self, f=float(f))


@dataclass(frozen=True)
class SteadyState:
    """One solution of the steady-state relations (normalized units)."""

    a_p: float
    a_si: float
    theta_cap: float
    psi: float
    f_drive: float
    stage: Stage = Stage.UNSTABLE

    @property
    def above_threshold(self) -> bool:
        return self.a_si > 0

    @property
    def theta_p(self) -> float:
        return -self.psi

    @property
    def theta_s(self) -> float:
        """Signal phase for the symmetric gauge theta_s = theta_i."""
        return self.theta_p + 0.5 * self.theta_cap

    @property
    def theta_i(self) -> float:
        return self.theta_s

    def fields(self) -> np.ndarray:
        """Complex normalized amplitudes (p, s, i)."""
        return np.array(
            [
                self.a_p * np.exp(1j * self.theta_p),
                self.a_si * np.exp(1j * self.theta_s),
                self.a_si * np.exp(1j * self.theta_i),
            ]
        )

    def with_stage(self, stage: Stage) -> "SteadyState":
        return replace(self, stage=stage)


# ---------------------------------------------------------------------------
# drive normalization


def normalize_drive(p: ResonatorParams, d: PumpDrive) -> NormalizedDrive:
    """Map a physical drive to ``(f, zeta0, delta_l)``.

    ``f^2 = 2 kappa_ex eta A_in^2 / kappa^3`` with ``A_in^2 = P_in / (hbar Omega0)``.
    """
    rates = derived_rates(p)
    if not rates.kappa > 0:
        raise ValidationError("kappa", "total loss rate must be positive")
    a_in = d.amplitude(p)
    f = math.sqrt(2.0 * rates.kappa_ex * rates.eta / rates.kappa**3) * a_in
    zeta0 = d.sigma_c / rates.kappa
    delta_l = cold_detuning(p, d.sigma_c, d.mode_l) / rates.kappa
    return NormalizedDrive(f=f, zeta0=zeta0, delta_l=delta_l, d3_over_2=delta_l - zeta0)


def denormalize_drive(
    p: ResonatorParams, nd: NormalizedDrive, mode_l: Optional[int] = None
) -> PumpDrive:
    """Inverse of :func:`normalize_drive`, returning a drive with ``a_in`` set.

    The mode number is recovered from ``d3_over_2`` unless given (it must be
    given when D2 = 0).
    """
    rates = derived_rates(p)
    sigma_c = nd.zeta0 * rates.kappa
    if mode_l is None:
        if p.d2 == 0:
            raise ValidationError("mode_l", "cannot be inferred when d2 = 0")
        l_sq = 2.0 * nd.d3_over_2 * rates.kappa / p.d2
        mode_l = int(round(math.sqrt(max(l_sq, 0.0))))
    if rates.eta == 0:
        if nd.f != 0:
            raise ValidationError("f", "nonzero drive is not representable with eta = 0")
        a_in = 0.0
    else:
        a_in = nd.f * math.sqrt(rates.kappa**3 / (2.0 * rates.kappa_ex * rates.eta))
    return PumpDrive(sigma_c=sigma_c, mode_l=mode_l, a_in=a_in)


def power_scale(p: ResonatorParams, sigma_c: float) -> float:
    """Watts per unit f^2 at detuning ``sigma_c``."""
    rates = derived_rates(p)
    if rates.eta <= 0:
        return math.inf
    return HBAR * (p.omega0 - sigma_c) * rates.kappa**3 / (2.0 * rates.kappa_ex * rates.eta)


# ---------------------------------------------------------------------------
# below threshold


def _cubic(x: float, f2: float, zeta: float) -> float:
    return x * (1.0 + (zeta - x) ** 2) - f2


def fold_points(zeta0: float) -> Optional[tuple]:
    """Turning points of f^2(x) = x(1 + (zeta0 - x)^2), or None if monotone."""
    if zeta0 <= SQRT3:
        return None
    r = math.sqrt(zeta0 * zeta0 - 3.0)
    return ((2.0 * zeta0 - r) / 3.0, (2.0 * zeta0 + r) / 3.0)


def _state_below(x: float, nd: NormalizedDrive) -> SteadyState:
    return SteadyState(
        a_p=math.sqrt(x),
        a_si=0.0,
        theta_cap=0.0,
        psi=math.atan2(nd.zeta0 - x, 1.0),
        f_drive=nd.f,
    )


def below_threshold_roots(f: float, zeta0: float) -> list:
    """Non-negative roots x = A_p^2 of x(1 + (zeta0 - x)^2) = f^2, ascending.

    Each root is isolated on an interval where the cubic is monotone and
    located by Brent's method.
    """
    f2 = f * f
    if f2 == 0.0:
        return [0.0]
    kw = dict(xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
    folds = fold_points(zeta0)
    if folds is None:
        return [brentq(_cubic, 0.0, max(f2, 1e-300), args=(f2, zeta0), **kw)]
    lo, hi = folds
    g_lo, g_hi = _cubic(lo, f2, zeta0), _cubic(hi, f2, zeta0)
    roots = []
    if g_lo >= 0:
        roots.append(lo if g_lo == 0 else brentq(_cubic, 0.0, lo, args=(f2, zeta0), **kw))
        if g_lo > 0 and g_hi < 0:
            roots.append(brentq(_cubic, lo, hi, args=(f2, zeta0), **kw))
    if g_hi <= 0:
        top = max(f2, hi)
        roots.append(hi if g_hi == 0 else brentq(_cubic, hi, top, args=(f2, zeta0), **kw))
    out = []
    for x in sorted(roots):
        if not out or abs(x - out[-1]) > MERGE_TOL * max(1.0, x):
            out.append(x)
    return out


def solve_below_threshold(nd: NormalizedDrive) -> list:
    """All states with A = 0, sorted by ascending ``a_p``."""
    return [_state_below(x, nd) for x in below_threshold_roots(nd.f, nd.zeta0)]


# ---------------------------------------------------------------------------
# above threshold


class AboveThresholdCurve:
    """The closed curve of above-threshold states for fixed detunings.

    Equations (1), (3) and (4) fix ``x`` in terms of ``c = delta_l - 3v``:
    ``3x^2 - 4cx + 1 + c^2 = 0``. Writing ``c = sqrt(3) cosh(t)`` gives
    ``x = (2 cosh t + sinh t) / sqrt(3)`` on both branches at once, with
    ``v > 0`` requiring ``|t| < arccosh(delta_l / sqrt(3))``. Equation (2) then
    reads ``f^2 = F2(t)``, solved by bracketing on a fixed sample of t.
    """

    def __init__(self, zeta0: float, delta_l: float, samples: int = 4001):
        self.zeta0 = float(zeta0)
        self.delta_l = float(delta_l)
        if self.delta_l > SQRT3:
            self.t_max = math.acosh(self.delta_l / SQRT3)
            self.t = np.linspace(-self.t_max, self.t_max, samples)
            self.f2 = self.f2_of(self.t)
        else:
            self.t_max = 0.0
            self.t = np.empty(0)
            self.f2 = np.empty(0)

    @property
    def exists(self) -> bool:
        return self.t.size > 0

    def xv(self, t):
        c = SQRT3 * np.cosh(t)
        x = (2.0 * np.cosh(t) + np.sinh(t)) / SQRT3
        v = (self.delta_l - c) / 3.0
        return x, v

    def f2_of(self, t):
        x, v = self.xv(t)
        re = 1.0 + 2.0 * v / x
        im = self.zeta0 - x - 2.0 * (v / x) * (self.delta_l - 3.0 * v)
        return x * (re * re + im * im)

    def f2_range(self) -> Optional[tuple]:
        """(min, max) of f^2 over the curve interior, refined locally."""
        if not self.exists:
            return None
        from scipy.optimize import minimize_scalar

        out = []
        for sign in (1.0, -1.0):
            k = int(np.argmin(sign * self.f2))
            a = self.t[max(k - 1, 0)]
            b = self.t[min(k + 1, self.t.size - 1)]
            res = minimize_scalar(
                lambda t: sign * float(self.f2_of(t)),
                bounds=(a, b),
                method="bounded",
                options=dict(xatol=1e-13),
            )
            out.append(min(sign * float(res.fun), sign * float(self.f2[k])) * sign)
        return out[0], out[1]

    def solve(self, f: float) -> list:
        if not self.exists:
            return []
        f2 = f * f
        g = self.f2 - f2
        fun = lambda t: float(self.f2_of(t)) - f2
        ts = []
        for k in range(g.size - 1):
            a, b = g[k], g[k + 1]
            if a == 0.0:
                ts.append(self.t[k])
            elif a * b < 0:
                ts.append(brentq(fun, self.t[k], self.t[k + 1], xtol=1e-15, rtol=1e-15))
        if g[-1] == 0.0:
            ts.append(self.t[-1])
        states = []
        for t in ts:
            x, v = (float(q) for q in self.xv(t))
            if not v > 1e-14:
                continue
            states.append(self._state(x, v, f))
        return _merge(states)

    def _state(self, x: float, v: float, f: float) -> SteadyState:
        theta_cap = math.atan2(1.0 / x, (self.delta_l - 2.0 * x - 3.0 * v) / x)
        re = 1.0 + 2.0 * v / x
        im = self.zeta0 - x - 2.0 * (v / x) * (self.delta_l - 3.0 * v)
        return SteadyState(
            a_p=math.sqrt(x),
            a_si=math.sqrt(v),
            theta_cap=theta_cap,
            psi=math.atan2(im, re),
            f_drive=f,
        )


def _merge(states: list) -> list:
    out = []
    for s in sorted(states, key=lambda s: (s.a_p, s.a_si)):
        if out and abs(s.a_p - out[-1].a_p) < MERGE_TOL and abs(s.a_si - out[-1].a_si) < MERGE_TOL:
            continue
        out.append(s)
    return out


def solve_above_threshold(nd: NormalizedDrive) -> list:
    """All states with A > 0, sorted by ``(a_p, a_si)``; empty if none."""
    return AboveThresholdCurve(nd.zeta0, nd.delta_l).solve(nd.f)


# ---------------------------------------------------------------------------
# dynamics, residuals, stability


def mean_field_rhs(z: np.ndarray, nd: NormalizedDrive) -> np.ndarray:
    """Time derivative of the normalized amplitudes ``z = (p, s, i)``."""
    p, s, i = z
    ap, as_, ai = abs(p) ** 2, abs(s) ** 2, abs(i) ** 2
    gp = 1j * ((ap + 2 * as_ + 2 * ai) * p + 2 * np.conj(p) * s * i) - (1 + 1j * nd.zeta0) * p + nd.f
    gs = 1j * ((2 * ap + as_ + 2 * ai) * s + p * p * np.conj(i)) - (1 + 1j * nd.delta_l) * s
    gi = 1j * ((2 * ap + ai + 2 * as_) * i + p * p * np.conj(s)) - (1 + 1j * nd.delta_l) * i
    return np.array([gp, gs, gi])


def full_jacobian(z: np.ndarray, nd: NormalizedDrive) -> np.ndarray:
    """6x6 Jacobian in the variables (p, p*, s, s*, i, i*), normalized units."""
    p, s, i = (complex(q) for q in z)
    pc, sc, ic = p.conjugate(), s.conjugate(), i.conjugate()
    n = abs(p) ** 2 + abs(s) ** 2 + abs(i) ** 2
    row_p = [
        2j * n - 1 - 1j * nd.zeta0 + 0j,
        1j * (p * p + 2 * s * i),
        1j * (2 * sc * p + 2 * pc * i),
        2j * s * p,
        1j * (2 * ic * p + 2 * pc * s),
        2j * i * p,
    ]
    row_s = [
        1j * (2 * pc * s + 2 * p * ic),
        2j * p * s,
        2j * n - 1 - 1j * nd.delta_l,
        1j * s * s,
        2j * ic * s,
        1j * (2 * i * s + p * p),
    ]
    row_i = [
        1j * (2 * pc * i + 2 * p * sc),
        2j * p * i,
        2j * sc * i,
        1j * (2 * s * i + p * p),
        2j * n - 1 - 1j * nd.delta_l,
        1j * i * i,
    ]
    J = np.zeros((6, 6), dtype=complex)
    swap = [1, 0, 3, 2, 5, 4]
    for r, row in zip((0, 2, 4), (row_p, row_s, row_i)):
        J[r] = row
        # conjugate equation: d(g*)/dz = conj(dg/dz*)
        J[r + 1] = np.conj(np.asarray(row)[swap])
    return J


def growth_rate(ss: SteadyState, nd: NormalizedDrive) -> float:
    """Largest real part of the full Jacobian spectrum (units of kappa)."""
    return float(np.max(np.linalg.eigvals(full_jacobian(ss.fields(), nd)).real))


def is_stable(ss: SteadyState, nd: NormalizedDrive, tol: float = STABILITY_TOL) -> bool:
    """Linear stability; the neutral phase mode above threshold is allowed."""
    return growth_rate(ss, nd) <= tol


def residuals(ss: SteadyState, nd: NormalizedDrive) -> np.ndarray:
    """The six steady-state relations evaluated at ``ss``.

    Lines (1) and (2) are divided by max(1, scale); lines that do not apply
    to a state with A = 0 are reported as 0.
    """
    x, v = ss.a_p**2, ss.a_si**2
    f = nd.f
    out = np.zeros(6)
    if ss.above_threshold:
        c = nd.delta_l - 2 * x - 3 * v
        out[0] = (x * x - 1 - c * c) / max(1.0, x * x)
        out[2] = x * math.sin(ss.theta_cap) - 1.0
        out[3] = x * math.cos(ss.theta_cap) - c
        re = 1 + 2 * v / x
        im = nd.zeta0 - x - 2 * (v / x) * (nd.delta_l - 3 * v)
    else:
        re, im = 1.0, nd.zeta0 - x
    f2_model = x * (re * re + im * im)
    out[1] = (f2_model - f * f) / max(1.0, f * f)
    out[4] = f * math.cos(ss.psi) - ss.a_p * re
    out[5] = f * math.sin(ss.psi) - ss.a_p * im
    return out


def max_residual(ss: SteadyState, nd: NormalizedDrive) -> float:
    return float(np.max(np.abs(residuals(ss, nd))))


def check_state(ss: SteadyState, nd: NormalizedDrive, tol: float = RESIDUAL_TOL) -> None:
    r = max_residual(ss, nd)
    if not r < tol:
        raise SteadyStateError(f"steady-state residual {r:.3e} exceeds {tol:.1e}")


def all_states(nd: NormalizedDrive, curve: Optional[AboveThresholdCurve] = None) -> list:
    """Every steady state (below and above threshold), stage left UNSTABLE."""
    if curve is None:
        curve = AboveThresholdCurve(nd.zeta0, nd.delta_l)
    return solve_below_threshold(nd) + curve.solve(nd.f)


# ---------------------------------------------------------------------------
# hysteresis stages


def _distance(a: SteadyState, b: SteadyState) -> float:
    return math.hypot(a.a_p - b.a_p, a.a_si - b.a_si)


class _Tracker:
    """Nearest-neighbour continuation with adaptive interval halving."""

    def __init__(self, solve, span: float, tol: float, budget: int):
        self.solve = solve
        self.min_width = 1e-9 * span
        self.tol = tol
        self.budget = budget
        self.evals = 0

    def stable_at(self, a: float) -> list:
        self.evals += 1
        if self.evals > self.budget:
            raise ContinuationError(a, a, math.nan)
        return self.solve(a)

    def step(self, cur: SteadyState, a0: float, a1: float, depth: int = 0) -> Optional[SteadyState]:
        cands = self.stable_at(a1)
        if not cands:
            return None
        best = min(cands, key=lambda s: _distance(cur, s))
        jump = _distance(cur, best)
        if jump <= self.tol or abs(a1 - a0) <= self.min_width:
            return best
        if depth > 80:
            raise ContinuationError(min(a0, a1), max(a0, a1), jump)
        mid = 0.5 * (a0 + a1)
        s_mid = self.step(cur, a0, mid, depth + 1)
        if s_mid is None:
            return best
        return self.step(s_mid, mid, a1, depth + 1)


def classify_stages(
    p: ResonatorParams,
    sigma_c: float,
    l: int,
    a_in_grid: Sequence[float],
    tol: float = 0.05,
    budget: int = 200000,
) -> list:
    """Label coexisting steady states along a pump-amplitude grid.

    Two continuation passes track the stable branch reached by sweeping the
    drive up from ``a_in_grid[0]`` (labels I below / II above threshold) and
    down from ``a_in_grid[-1]`` (III above / IV below threshold). States not
    visited by either pass are labelled UNSTABLE if linearly unstable, and
    otherwise I/IV (below) or III (above). A state visited by both passes is
    returned once per label.

    Returns
    -------
    list of (a_in, list[SteadyState])
    """
    grid = np.asarray(a_in_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("a_in_grid", "must be strictly increasing with >= 2 points")
    if np.any(grid < 0):
        raise ValidationError("a_in_grid", "amplitudes must be >= 0")

    base = normalize_drive(p, PumpDrive(sigma_c=sigma_c, mode_l=l, a_in=1.0))
    unit_f = base.f
    curve = AboveThresholdCurve(base.zeta0, base.delta_l)
    cache = {}

    def solve(a: float):
        if a not in cache:
            nd = base.with_f(unit_f * a)
            sols = all_states(nd, curve)
            cache[a] = [s for s in sols if is_stable(s, nd)], sols
        return cache[a][0]

    tracker = _Tracker(solve, float(grid[-1] - grid[0]), tol, budget)

    def run(order, pick):
        visited = {}
        cur = None
        prev = None
        for a in order:
            if cur is None:
                cands = tracker.stable_at(a)
                cur = pick(cands) if cands else None
            else:
                cur = tracker.step(cur, prev, a)
                if cur is None:
                    cands = tracker.stable_at(a)
                    cur = pick(cands) if cands else None
            visited[a] = cur
            prev = a
        return visited

    up = run(list(grid), lambda c: min(c, key=lambda s: (s.a_p, s.a_si)))
    down = run(list(grid[::-1]), lambda c: max(c, key=lambda s: (s.a_p, -s.a_si)))

    out = []
    for a in grid:
        solve(a)
        nd = base.with_f(unit_f * a)
        stable, sols = cache[a]
        below_roots = [s for s in sols if not s.above_threshold]
        entries = []
        for s in sols:
            labels = []
            if up[a] is not None and _same(up[a], s):
                labels.append(Stage.II if s.above_threshold else Stage.I)
            if down[a] is not None and _same(down[a], s):
                labels.append(Stage.III if s.above_threshold else Stage.IV)
            if not labels:
                if not any(_same(s, t) for t in stable):
                    labels.append(Stage.UNSTABLE)
                elif s.above_threshold:
                    labels.append(Stage.III)
                elif _same(s, below_roots[0]):
                    labels.append(Stage.I)
                else:
                    labels.append(Stage.IV)
            entries.extend(s.with_stage(lab) for lab in labels)
        out.append((float(a), entries))
    return out


def _same(a: SteadyState, b: SteadyState) -> bool:
    return a.a_p == b.a_p and a.a_si == b.a_si


def auto_grid(a_in: float, below: int = 81, beyond: int = 21, overshoot: float = 1.25) -> np.ndarray:
    """Drive grid 0..a_in (a_in a node) extended to overshoot*a_in."""
    if not a_in > 0:
        raise ValidationError("a_in", "must be positive to build a continuation grid")
    lo = np.linspace(0.0, a_in, below)
    hi = np.linspace(a_in, overshoot * a_in, beyond)[1:]
    return np.concatenate([lo, hi])


def stage_state(p: ResonatorParams, d: PumpDrive, stage: Stage, tol: float = 0.05) -> SteadyState:
    """The steady state on hysteresis ``stage`` at the drive ``d``.

    Raises
    ------
    StageAbsentError
        If that stage does not exist at this drive.
    """
    stage = Stage.parse(stage) if not isinstance(stage, Stage) else stage
    a_in = d.amplitude(p)
    if a_in == 0:
        if stage not in (Stage.I, Stage.IV):
            _absent(stage, a_in)
        return solve_below_threshold(normalize_drive(p, d))[0].with_stage(stage)
    grid = auto_grid(a_in)
    table = classify_stages(p, d.sigma_c, d.mode_l, grid, tol=tol)
    for a, entries in table:
        if a == a_in:
            for s in entries:
                if s.stage == stage:
                    return s
    return _absent(stage, a_in)


def _absent(stage: Stage, a_in: float):
    raise StageAbsentError(f"stage {stage.value} does not exist at a_in={a_in:.6g}")


# ---------------------------------------------------------------------------
# threshold


def opo_band(delta_l: float) -> Optional[tuple]:
    """Range of x = A_p^2 where the vacuum signal/idler pair has gain."""
    if delta_l <= SQRT3:
        return None
    r = math.sqrt(delta_l * delta_l - 3.0)
    return ((2.0 * delta_l - r) / 3.0, (2.0 * delta_l + r) / 3.0)


def threshold_f2(nd: NormalizedDrive) -> Optional[float]:
    """Normalized onset drive f^2 at which A_p^2 reaches the lower band edge."""
    band = opo_band(nd.delta_l)
    if band is None:
        return None
    y1 = band[0]
    return y1 * (1.0 + (nd.zeta0 - y1) ** 2)


def threshold_power(
    p: ResonatorParams, sigma_c: float, l: int, ceiling: float = DEFAULT_CEILING_W
) -> float:
    """Pump power [W] at which signal/idler mode ``l`` starts to oscillate.

    This is the drive at which the intracavity pump intensity reaches the
    lower edge of the parametric gain band, y1 = (2 delta_l - sqrt(delta_l^2 - 3))/3.

    Raises
    ------
    ThresholdError
        If mode ``l`` has no gain band (delta_l <= sqrt(3)) or the power
        exceeds ``ceiling``.
    """
    if l < 1:
        raise ValidationError("mode_l", f"must be >= 1, got {l!r}")
    nd = normalize_drive(p, PumpDrive(sigma_c=sigma_c, mode_l=l, a_in=0.0))
    f2 = threshold_f2(nd)
    if f2 is None:
        raise ThresholdError(ceiling, f"no parametric gain for l={l} (delta_l={nd.delta_l:.4g} <= sqrt(3))")
    power = f2 * power_scale(p, sigma_c)
    if not power <= ceiling:
        raise ThresholdError(ceiling, f"onset at {power:.6g} W")
    return power


def oscillation_floor_power(
    p: ResonatorParams, sigma_c: float, l: int, ceiling: float = DEFAULT_CEILING_W
) -> float:
    """Smallest pump power [W] at which any above-threshold state exists."""
    nd = normalize_drive(p, PumpDrive(sigma_c=sigma_c, mode_l=l, a_in=0.0))
    rng = AboveThresholdCurve(nd.zeta0, nd.delta_l).f2_range()
    if rng is None:
        raise ThresholdError(ceiling, f"no above-threshold states for l={l}")
    power = rng[0] * power_scale(p, sigma_c)
    if not power <= ceiling:
        raise ThresholdError(ceiling, f"first above-threshold state at {power:.6g} W")
    return power
