"""
Resonator and pump configuration.

Holds the physical description of a microring (dispersion, coupling, loss,
Kerr nonlinearity) and the pump drive, and derives the rates used by the
mean-field and fluctuation models.

Conventions
-----------
Every angular quantity (detunings, dispersion, loss rates) is stored in rad/s.
Plain frequencies (``f0``, ``fsr``) are in Hz. Conversion from user-facing Hz
values happens only at the CLI/config boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import c as C_VACUUM
from scipy.constants import hbar as HBAR

from .errors import RangeError, ValidationError

TWO_PI = 2.0 * math.pi


def _require_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ValidationError(name, f"must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ResonatorParams:
    """
    Physical microring description.

    Parameters
    ----------
    f0 : float
        Resonance frequency of the pump mode l=0 [Hz].
    fsr : float
        Free spectral range [Hz]; D1 = 2*pi*fsr.
    d2 : float
        Second-order dispersion D2 [rad/s]; positive is anomalous.
    q0 : float
        Intrinsic quality factor.
    r : float
        Coupling ratio kappa_ex / kappa0.
    radius : float
        Mean ring radius [m].
    a_eff : float
        Effective mode area [m^2].
    n0 : float
        Linear refractive index.
    n2 : float
        Kerr index [m^2/W].
    eta : float, optional
        Override for the per-photon Kerr shift [rad/s]. When ``None`` the
        mode-volume estimate is used.
    gap : float, optional
        Ring-bus gap [m]. Annotation only; ``r`` is what the models use.
    """

    f0: float
    fsr: float
    d2: float
    q0: float
    r: float
    radius: float
    a_eff: float
    n0: float = 2.0
    n2: float = 2.6e-19
    eta: Optional[float] = None
    gap: Optional[float] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name in ("f0", "fsr", "q0", "r", "radius", "a_eff", "n2"):
            _require_positive(name, getattr(self, name))
        if not (self.n0 >= 1 and math.isfinite(self.n0)):
            raise ValidationError("n0", f"must be >= 1, got {self.n0!r}")
        if not math.isfinite(self.d2):
            raise ValidationError("d2", f"must be finite, got {self.d2!r}")
        if self.eta is not None and not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValidationError("eta", f"override must be >= 0, got {self.eta!r}")

    @property
    def omega0(self) -> float:
        """Pump-mode resonance [rad/s]."""
        return TWO_PI * self.f0

    @property
    def d1(self) -> float:
        """D1 = 2*pi*FSR [rad/s]."""
        return TWO_PI * self.fsr


@dataclass(frozen=True)
class DerivedRates:
    """Loss/coupling rates [rad/s], Kerr shift per photon [rad/s] and V_eff [m^3]."""

    kappa0: float
    kappa_ex: float
    kappa: float
    eta: float
    v_eff: float
    omega0: float

    @property
    def q_ex(self) -> float:
        return self.omega0 / self.kappa_ex

    @property
    def q_total(self) -> float:
        return self.omega0 / self.kappa


def mode_volume(p: ResonatorParams) -> float:
    """Ring mode volume approximated as A_eff * 2*pi*R [m^3]."""
    return p.a_eff * TWO_PI * p.radius


def kerr_shift_per_photon(p: ResonatorParams) -> float:
    """hbar * omega0^2 * c * n2 / (n0^2 * V_eff), in rad/s."""
    return HBAR * p.omega0**2 * C_VACUUM * p.n2 / (p.n0**2 * mode_volume(p))


def derived_rates(p: ResonatorParams) -> DerivedRates:
    """Rates used by the dynamical models.

    kappa0 = omega0/Q0, kappa_ex = r*kappa0, kappa = kappa0 + kappa_ex.
    """
    kappa0 = p.omega0 / p.q0
    kappa_ex = p.r * kappa0
    eta = kerr_shift_per_photon(p) if p.eta is None else p.eta
    return DerivedRates(
        kappa0=kappa0,
        kappa_ex=kappa_ex,
        kappa=kappa0 + kappa_ex,
        eta=eta,
        v_eff=mode_volume(p),
        omega0=p.omega0,
    )


def cold_detuning(p: ResonatorParams, sigma_c: float, l: int) -> float:
    """Cold-cavity detuning of mode ``l`` [rad/s]: sigma_c + D2/2 * l^2."""
    return sigma_c + 0.5 * p.d2 * l * l


def resonance_frequency(p: ResonatorParams, l: int) -> float:
    """Resonance of mode ``l`` [rad/s], dispersion truncated after D2."""
    return p.omega0 + p.d1 * l + 0.5 * p.d2 * l * l


@dataclass(frozen=True)
class PumpDrive:
    """
    Pump laser settings.

    Exactly one of ``p_in`` [W] and ``a_in`` [s^-1/2] is normally given; when
    both are present they must agree through a_in^2 * hbar * Omega0 = p_in,
    with Omega0 = omega0 - sigma_c the laser frequency.
    """

    sigma_c: float
    mode_l: int = 1
    p_in: Optional[float] = None
    a_in: Optional[float] = None

    def __post_init__(self) -> None:
        if self.p_in is None and self.a_in is None:
            raise ValidationError("p_in", "one of p_in / a_in is required")
        if self.p_in is not None and not (self.p_in >= 0 and math.isfinite(self.p_in)):
            raise ValidationError("p_in", f"must be >= 0, got {self.p_in!r}")
        if self.a_in is not None and not (self.a_in >= 0 and math.isfinite(self.a_in)):
            raise ValidationError("a_in", f"must be >= 0, got {self.a_in!r}")
        if int(self.mode_l) != self.mode_l or self.mode_l < 1:
            raise ValidationError("mode_l", f"must be an integer >= 1, got {self.mode_l!r}")
        if not math.isfinite(self.sigma_c):
            raise ValidationError("sigma_c", f"must be finite, got {self.sigma_c!r}")

    def laser_frequency(self, p: ResonatorParams) -> float:
        """Omega0 = omega0 - sigma_c [rad/s]."""
        return p.omega0 - self.sigma_c

    def amplitude(self, p: ResonatorParams) -> float:
        """Incident pump amplitude sqrt(P_in / (hbar Omega0)) [s^-1/2]."""
        photon = HBAR * self.laser_frequency(p)
        if self.a_in is not None:
            if self.p_in is not None:
                expected = self.a_in**2 * photon
                if not math.isclose(expected, self.p_in, rel_tol=1e-9, abs_tol=0.0):
                    raise ValidationError(
                        "p_in", f"inconsistent with a_in ({self.p_in!r} W vs {expected!r} W)"
                    )
            return float(self.a_in)
        return math.sqrt(self.p_in / photon)

    def power(self, p: ResonatorParams) -> float:
        """Pump power in the bus waveguide [W]."""
        if self.p_in is not None and self.a_in is None:
            return float(self.p_in)
        return self.amplitude(p) ** 2 * HBAR * self.laser_frequency(p)


@dataclass(frozen=True)
class IndexTable:
    """Sampled refractive index n(omega), omega in rad/s, strictly increasing."""

    omega: tuple
    n: tuple

    def __post_init__(self) -> None:
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or len(w) < 2 or len(w) != len(self.n):
            raise ValidationError("omega", "need >= 2 samples with matching n values")
        if np.any(np.diff(w) <= 0):
            raise ValidationError("omega", "must be strictly increasing")

    def __call__(self, omega: float) -> float:
        w = np.asarray(self.omega, dtype=float)
        if omega < w[0] or omega > w[-1]:
            raise RangeError(f"omega={omega!r} outside table range [{w[0]!r}, {w[-1]!r}]")
        return float(np.interp(omega, w, np.asarray(self.n, dtype=float)))

    @property
    def resolution(self) -> float:
        return float(np.max(np.diff(np.asarray(self.omega, dtype=float))))


def phase_mismatch(n_of_omega: IndexTable, wp: float, ws: float, wi: float) -> float:
    """FWM wavevector mismatch [1/m] with n(omega) linearly interpolated."""
    if abs(2 * wp - ws - wi) > n_of_omega.resolution:
        raise ValidationError("wp", "2*wp must equal ws + wi within the table resolution")
    return (
        2 * wp * n_of_omega(wp) - ws * n_of_omega(ws) - wi * n_of_omega(wi)
    ) / C_VACUUM
