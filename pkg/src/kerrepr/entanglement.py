"""
Quadrature spectra, the Duan inseparability value, and the frequency
dependence of signal/idler entanglement.

Quadratures use ``x = (a + a^+)/sqrt(2)``, so vacuum has variance 1/2 and the
Duan value ``C_s = (dx_-)^2 + (dy_+)^2 - |cos(theta_s - theta_i)|`` is zero for
vacuum at equal detection angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import NoEntanglementError, StageAbsentError, ValidationError
from .fluctuations import LinearizedSystem, NoiseSpectrum, linearize, output_spectra
from .params import PumpDrive, ResonatorParams
from .steady_state import Stage, normalize_drive, stage_state

ENTANGLEMENT_GUARD = 1e-9
TWO_PI = 2.0 * math.pi

Q_SUM_DIFF = np.array(
    [
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, -1.0],
        [1.0, -1.0, 0.0, 0.0],
    ]
) / math.sqrt(2.0)


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
    w = np.where(w == -math.pi, math.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class DetectionAngles:
    """Homodyne angles; ``phi`` is the readout angle theta_s - theta_i."""

    theta_s: float
    theta_i: float

    @property
    def phi(self) -> float:
        return wrap_angle(self.theta_s - self.theta_i)

    def canonical(self) -> "DetectionAngles":
        """Representative of {(ts, ti), (ts + pi, ti + pi)} wrapped to (-pi, pi]."""
        a = (wrap_angle(self.theta_s), wrap_angle(self.theta_i))
        b = (wrap_angle(self.theta_s + math.pi), wrap_angle(self.theta_i + math.pi))
        return DetectionAngles(*min(a, b))


@dataclass(frozen=True)
class EntanglementPoint:
    omega: float
    angles: DetectionAngles
    dx_minus_sq: float
    dy_plus_sq: float
    g: float

    @property
    def c_s(self) -> float:
        return self.dx_minus_sq + self.dy_plus_sq - abs(self.g)

    @property
    def entangled(self) -> bool:
        return self.c_s < -ENTANGLEMENT_GUARD


def detection_matrix(angles: DetectionAngles) -> np.ndarray:
    """The angle rotation P taking (a, a^+) pairs to (x, y) quadratures."""
    a = np.exp(-1j * angles.theta_s)
    b = np.exp(-1j * angles.theta_i)
    return np.array(
        [
            [a, 1 / a, 0, 0],
            [0, 0, b, 1 / b],
            [-1j * a, 1j / a, 0, 0],
            [0, 0, -1j * b, 1j / b],
        ]
    ) / math.sqrt(2.0)


def quadrature_spectrum(spec: NoiseSpectrum, angles: DetectionAngles) -> np.ndarray:
    """S_X = (Q P) S_a (Q P)^T.

    Diagonal entries are the spectra of (y_+, x_+, y_-, x_-).
    """
    qp = Q_SUM_DIFF @ detection_matrix(angles)
    return qp @ spec.s_a @ qp.T


def duan_value(spec: NoiseSpectrum, angles: DetectionAngles) -> EntanglementPoint:
    sx = quadrature_spectrum(spec, angles)
    return EntanglementPoint(
        omega=spec.omega,
        angles=angles,
        dx_minus_sq=float(sx[3, 3].real),
        dy_plus_sq=float(sx[0, 0].real),
        g=math.cos(angles.theta_s - angles.theta_i),
    )


def _duan_rows(theta_s, theta_i):
    """Rows 0 and 3 of Q P for broadcast angle arrays; shape (..., 4)."""
    a = np.exp(-1j * np.asarray(theta_s, dtype=float))
    b = np.exp(-1j * np.asarray(theta_i, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    y_plus = 0.5 * np.stack([-1j * a, 1j / a, -1j * b, 1j / b], axis=-1)
    x_minus = 0.5 * np.stack([a, 1 / a, -b, -1 / b], axis=-1)
    return y_plus, x_minus


def duan_surface(s_a: np.ndarray, theta_s, theta_i) -> np.ndarray:
    """C_s on broadcast angle arrays for one 4x4 S_a."""
    yp, xm = _duan_rows(theta_s, theta_i)
    var = np.einsum("...i,ij,...j->...", yp, s_a, yp) + np.einsum("...i,ij,...j->...", xm, s_a, xm)
    return var.real - np.abs(np.cos(np.asarray(theta_s) - np.asarray(theta_i)))


def angle_grid(n: int) -> np.ndarray:
    """n equispaced angles covering (-pi, pi]."""
    return -math.pi + TWO_PI * np.arange(1, n + 1) / n


def optimize_angles(spec: NoiseSpectrum, grid: int = 64, xatol: float = 1e-7) -> EntanglementPoint:
    """Minimize C_s over both detection angles.

    A ``grid`` x ``grid`` scan seeds a Nelder-Mead refinement; the refined
    point is kept only if it does not increase C_s.
    """
    g = angle_grid(grid)
    ts, ti = np.meshgrid(g, g, indexing="ij")
    surf = duan_surface(spec.s_a, ts, ti)
    k = np.unravel_index(int(np.argmin(surf)), surf.shape)
    start = np.array([ts[k], ti[k]])
    coarse = float(surf[k])
    res = minimize(
        lambda q: float(duan_surface(spec.s_a, q[0], q[1])),
        start,
        method="Nelder-Mead",
        options=dict(xatol=xatol, fatol=1e-15, maxiter=4000, initial_simplex=_simplex(start, TWO_PI / grid)),
    )
    best = res.x if res.fun <= coarse else start
    angles = DetectionAngles(float(best[0]), float(best[1])).canonical()
    return duan_value(spec, angles)


def _simplex(x0: np.ndarray, h: float) -> np.ndarray:
    return np.array([x0, x0 + [h, 0.0], x0 + [0.0, h]])


def best_point(lin: LinearizedSystem, omega: float, grid: int = 64) -> EntanglementPoint:
    s = output_spectra(lin, [omega])[0]
    return optimize_angles(NoiseSpectrum(omega=float(omega), s_a=s), grid=grid)


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class SqueezingMap:
    """C_s(omega, phi) with theta_s = phi + theta_i.

    ``theta_i`` holds the idler angle used in each cell (optimized unless the
    map was built with a fixed idler angle). ``phi_opt[k]`` is the grid
    readout angle minimizing row k; exact ties (within ``TIE_TOL``) go to
    the smallest |phi|, then the smallest phi.
    """

    omega: np.ndarray
    phi: np.ndarray
    cs: np.ndarray
    theta_i: np.ndarray
    phi_opt: np.ndarray

    @property
    def f_hz(self) -> np.ndarray:
        return self.omega / TWO_PI

    @property
    def squeezing_angle(self) -> np.ndarray:
        """Signal angle -theta_i conditioned by the idler readout at phi_opt."""
        k = np.array([int(np.flatnonzero(self.phi == p)[0]) for p in self.phi_opt])
        return wrap_angle(-self.theta_i[np.arange(self.omega.size), k])


TIE_TOL = 1e-12


def _argmin_phi(phi: np.ndarray, row: np.ndarray) -> float:
    near = np.flatnonzero(row <= row.min() + TIE_TOL)
    return float(min(phi[near], key=lambda p: (abs(p), p)))


def _min_over_theta_i(s_a: np.ndarray, phi: float, seeds: np.ndarray, vals: np.ndarray):
    k = int(np.argmin(vals))
    h = seeds[1] - seeds[0]
    res = minimize_scalar(
        lambda t: float(duan_surface(s_a, phi + t, t)),
        bounds=(seeds[k] - h, seeds[k] + h),
        method="bounded",
        options=dict(xatol=1e-9),
    )
    if res.fun <= vals[k]:
        return float(res.fun), wrap_angle(res.x)
    return float(vals[k]), float(seeds[k])


def min_over_theta_i(s_a: np.ndarray, phi: float, inner: int = 64):
    """(C_s, theta_i) minimizing C_s at fixed readout angle phi."""
    seeds = angle_grid(inner)
    return _min_over_theta_i(s_a, float(phi), seeds, duan_surface(s_a, phi + seeds, seeds))


def squeezing_map(
    lin: LinearizedSystem, omega_grid, phi_grid, inner: int = 64, theta_i: Optional[float] = None
) -> SqueezingMap:
    """C_s over sideband frequency and readout angle phi = theta_s - theta_i.

    By default the common angle theta_i is optimized in every cell. With
    ``theta_i`` given the idler angle is held fixed instead and only the
    signal angle follows phi.
    """
    omega = np.asarray(omega_grid, dtype=float)
    phi = np.asarray(phi_grid, dtype=float)
    if omega.size == 0 or phi.size == 0:
        raise ValidationError("grid", "omega and phi grids must be nonempty")
    spectra = output_spectra(lin, omega)
    cs = np.empty((omega.size, phi.size))
    th = np.empty_like(cs)
    if theta_i is not None:
        for a, s_a in enumerate(spectra):
            cs[a] = duan_surface(s_a, phi + theta_i, np.full_like(phi, theta_i))
        th[:] = theta_i
    else:
        seeds = angle_grid(inner)
        for a, s_a in enumerate(spectra):
            surf = duan_surface(s_a, phi[:, None] + seeds[None, :], seeds[None, :])
            for b in range(phi.size):
                cs[a, b], th[a, b] = _min_over_theta_i(s_a, float(phi[b]), seeds, surf[b])
    phi_opt = np.array([_argmin_phi(phi, row) for row in cs])
    return SqueezingMap(omega=omega, phi=phi, cs=cs, theta_i=th, phi_opt=phi_opt)


@dataclass(frozen=True)
class EntanglementMap:
    """Minimum C_s on an (r, omega) grid; NaN marks rows whose stage is absent."""

    r: np.ndarray
    omega: np.ndarray
    cs: np.ndarray
    theta_s: np.ndarray
    theta_i: np.ndarray
    absent: tuple

    @property
    def f_hz(self) -> np.ndarray:
        return self.omega / TWO_PI


def entanglement_row(
    p: ResonatorParams, d: PumpDrive, omega_grid, stage: Stage = Stage.IV, grid: int = 64
) -> list:
    """Optimal-angle Duan points along ``omega_grid`` for one configuration.

    Raises
    ------
    StageAbsentError
        If ``stage`` does not exist for this configuration.
    """
    ss = stage_state(p, d, stage)
    lin = linearize(p, normalize_drive(p, d), ss)
    omega = np.asarray(omega_grid, dtype=float)
    spectra = output_spectra(lin, omega)
    return [optimize_angles(NoiseSpectrum(float(w), s), grid=grid) for w, s in zip(omega, spectra)]


def entanglement_map(
    p: ResonatorParams,
    d: PumpDrive,
    r_grid: Sequence[float],
    omega_grid,
    stage: Stage = Stage.IV,
    grid: int = 64,
) -> EntanglementMap:
    """Minimum-over-angles C_s for each coupling ratio r and sideband frequency."""
    r = np.asarray(r_grid, dtype=float)
    omega = np.asarray(omega_grid, dtype=float)
    if np.any(r <= 0):
        raise ValidationError("r", "coupling ratios must be positive")
    cs = np.full((r.size, omega.size), np.nan)
    ts = np.full_like(cs, np.nan)
    ti = np.full_like(cs, np.nan)
    absent = []
    for k, rk in enumerate(r):
        try:
            row = entanglement_row(replace(p, r=float(rk)), d, omega, stage, grid)
        except StageAbsentError:
            absent.append(k)
            continue
        cs[k] = [pt.c_s for pt in row]
        ts[k] = [pt.angles.theta_s for pt in row]
        ti[k] = [pt.angles.theta_i for pt in row]
    return EntanglementMap(r=r, omega=omega, cs=cs, theta_s=ts, theta_i=ti, absent=tuple(absent))


# ---------------------------------------------------------------------------
# bandwidth


@dataclass(frozen=True)
class Bandwidth:
    """Width of the C_s dip at 1/e of its extremum.

    Attributes
    ----------
    width_hz : float
        (omega_hi - omega_lo) / 2 pi.
    omega_star : float
        Location of the extremum [rad/s].
    cs_star : float
        C_s at ``omega_star``.
    edge_clipped : bool
        True if the 1/e interval reaches the end of the grid.
    """

    width_hz: float
    omega_star: float
    cs_star: float
    omega_lo: float
    omega_hi: float
    edge_clipped: bool

    @property
    def f_star_hz(self) -> float:
        return self.omega_star / TWO_PI


def bandwidth_from_profile(cs_of: Callable[[float], float], omega_grid, rel_tol: float = 1e-4) -> Bandwidth:
    """1/e bandwidth of a negative dip of ``cs_of`` sampled on ``omega_grid``.

    The extremum is refined between its grid neighbours; each boundary is
    bracketed by adjacent samples and located by Brent's method to a relative
    accuracy well below ``rel_tol`` of the bandwidth.
    """
    w = np.asarray(omega_grid, dtype=float)
    if w.ndim != 1 or w.size < 3 or np.any(np.diff(w) <= 0):
        raise ValidationError("omega_grid", "need >= 3 strictly increasing samples")
    cs = np.array([cs_of(float(x)) for x in w])
    k = int(np.argmin(cs))
    if not cs[k] < -ENTANGLEMENT_GUARD:
        raise NoEntanglementError(f"min C_s = {cs[k]:.3e} on the grid; no entanglement")

    lo_n, hi_n = w[max(k - 1, 0)], w[min(k + 1, w.size - 1)]
    w_star, c_star = float(w[k]), float(cs[k])
    if hi_n > lo_n:
        logscale = lo_n > 0
        if logscale:
            res = minimize_scalar(
                lambda u: cs_of(math.exp(u)), bounds=(math.log(lo_n), math.log(hi_n)),
                method="bounded", options=dict(xatol=1e-10),
            )
            cand = math.exp(res.x)
        else:
            res = minimize_scalar(
                cs_of, bounds=(lo_n, hi_n), method="bounded",
                options=dict(xatol=1e-10 * max(abs(hi_n), 1.0)),
            )
            cand = float(res.x)
        if res.fun < c_star:
            w_star, c_star = cand, float(res.fun)

    thr = abs(c_star) / math.e
    depth = lambda x: -cs_of(x) - thr
    inside = -cs - thr >= 0
    scale = max(abs(w_star), np.min(np.diff(w)))
    xtol = 1e-3 * rel_tol * scale

    j = int(np.searchsorted(w, w_star, side="right"))
    while j < w.size and inside[j]:
        j += 1
    if j == w.size:
        hi, clip_hi = float(w[-1]), True
    else:
        a = max(w_star, float(w[j - 1])) if j > 0 else w_star
        hi, clip_hi = brentq(depth, a, float(w[j]), xtol=xtol, rtol=1e-14), False

    j = int(np.searchsorted(w, w_star, side="left")) - 1
    while j >= 0 and inside[j]:
        j -= 1
    if j < 0:
        lo, clip_lo = float(w[0]), True
    else:
        b = min(w_star, float(w[j + 1]))
        lo, clip_lo = brentq(depth, float(w[j]), b, xtol=xtol, rtol=1e-14), False

    return Bandwidth(
        width_hz=(hi - lo) / TWO_PI,
        omega_star=w_star,
        cs_star=c_star,
        omega_lo=lo,
        omega_hi=hi,
        edge_clipped=clip_lo or clip_hi,
    )


def entanglement_bandwidth(lin: LinearizedSystem, omega_grid, grid: int = 64) -> Bandwidth:
    """Entanglement bandwidth of a linearized state at per-frequency optimal angles.

    Raises
    ------
    NoEntanglementError
        If C_s never drops below zero on ``omega_grid``.
    """
    return bandwidth_from_profile(lambda w: best_point(lin, w, grid).c_s, omega_grid)
