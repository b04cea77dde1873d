"""
Linearized quantum fluctuations of the signal/idler pair and their output
spectral density.

The fluctuation vector is ``(da_s e^{-i theta_s}, da_s^+ e^{i theta_s},
da_i e^{-i theta_i}, da_i^+ e^{i theta_i})`` with the pump held at its
classical steady value. The drift matrix is the signal/idler block of the
mean-field Jacobian, rotated into that frame and scaled to rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSpectrumError
from .params import ResonatorParams, derived_rates
from .steady_state import STABILITY_TOL, NormalizedDrive, SteadyState, check_state, full_jacobian

M_C = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)
M_C.setflags(write=False)

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class LinearizedSystem:
    """Drift and coupling matrices of the linear Langevin model.

    Attributes
    ----------
    m_a : ndarray, shape (4, 4), complex
        Drift matrix [rad/s].
    t_in, t_loss : ndarray, shape (4, 4)
        diag(sqrt(2 kappa_ex)) and diag(sqrt(2 kappa0)).
    m_c : ndarray, shape (4, 4)
        Input-noise correlation pattern.
    kappa, kappa0, kappa_ex : float
        Rates the matrices were built from [rad/s].
    """

    m_a: np.ndarray
    t_in: np.ndarray
    t_loss: np.ndarray
    m_c: np.ndarray
    kappa: float
    kappa0: float
    kappa_ex: float

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.m_a)

    def max_growth(self) -> float:
        """Largest real part of the drift spectrum [rad/s]."""
        return float(np.max(self.eigenvalues().real))


@dataclass(frozen=True)
class NoiseSpectrum:
    """Output spectral density matrix S_a at angular sideband frequency ``omega``."""

    omega: float
    s_a: np.ndarray

    @property
    def f_hz(self) -> float:
        return self.omega / (2.0 * np.pi)


def rotation(theta_s: float, theta_i: float) -> np.ndarray:
    return np.diag(
        [
            np.exp(-1j * theta_s),
            np.exp(1j * theta_s),
            np.exp(-1j * theta_i),
            np.exp(1j * theta_i),
        ]
    )


def linearize(
    p: ResonatorParams, nd: NormalizedDrive, ss: SteadyState, check: bool = True
) -> LinearizedSystem:
    """Build the linear fluctuation model around a steady state.

    Parameters
    ----------
    check : bool
        Refuse states whose steady-state residual exceeds tolerance.
    """
    if check:
        check_state(ss, nd)
    rates = derived_rates(p)
    block = full_jacobian(ss.fields(), nd)[2:, 2:]
    d = rotation(ss.theta_s, ss.theta_i)
    # D J D^-1 with D diagonal and unimodular
    m_a = (d @ block @ d.conj()) * rates.kappa
    t_in = np.eye(4) * np.sqrt(2.0 * rates.kappa_ex)
    t_loss = np.eye(4) * np.sqrt(2.0 * rates.kappa0)
    return LinearizedSystem(
        m_a=m_a,
        t_in=t_in,
        t_loss=t_loss,
        m_c=M_C.copy(),
        kappa=rates.kappa,
        kappa0=rates.kappa0,
        kappa_ex=rates.kappa_ex,
    )


def _transfer(lin: LinearizedSystem, omega: np.ndarray):
    """Return (X(omega), L(omega)) for a batch of frequencies."""
    eye = np.eye(4)
    a = 1j * omega[:, None, None] * eye - lin.m_a
    cond = np.linalg.cond(a)
    bad = ~(cond < _COND_LIMIT)
    if np.any(bad):
        w = float(omega[np.argmax(bad)])
        raise SingularSpectrumError(f"(i omega I - M_a) singular at omega={w:.6g} rad/s")
    rhs = np.concatenate([lin.t_in, lin.t_loss], axis=1)
    sol = np.linalg.solve(a, np.broadcast_to(rhs, (omega.size, 4, 8)))
    x = lin.t_in @ sol[:, :, :4] - eye
    l = lin.t_in @ sol[:, :, 4:]
    return x, l


def output_spectra(lin: LinearizedSystem, omegas) -> np.ndarray:
    """S_a for an array of sideband frequencies; shape (n, 4, 4).

    Raises
    ------
    SingularSpectrumError
        If the drift matrix has a growing mode (no stationary spectrum) or
        ``i omega I - M_a`` is numerically singular.
    """
    growth = lin.max_growth()
    if growth > STABILITY_TOL * lin.kappa:
        raise SingularSpectrumError(
            f"drift matrix unstable (max Re eigenvalue {growth / lin.kappa:.3g} kappa); no stationary spectrum"
        )
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    xp, lp = _transfer(lin, w)
    xm, lm = _transfer(lin, -w)
    mc = lin.m_c
    return xp @ mc @ np.swapaxes(xm, 1, 2) + lp @ mc @ np.swapaxes(lm, 1, 2)


def output_spectrum(lin: LinearizedSystem, omega: float) -> NoiseSpectrum:
    """Output spectral density S_a(omega) of the signal/idler pair.

    ``S_a = X(w) M_c X(-w)^T + L(w) M_c L(-w)^T`` with
    ``X(w) = T_in (i w - M_a)^-1 T_in - I`` and ``L(w) = T_in (i w - M_a)^-1 T_loss``.

    Raises
    ------
    SingularSpectrumError
        When the drift matrix is unstable or ``i omega I - M_a`` is
        numerically singular.
    """
    return NoiseSpectrum(omega=float(omega), s_a=output_spectra(lin, [omega])[0])


def default_omega_grid(kappa: float, count: int = 241, lo: float = 1e-3, hi: float = 1e3) -> np.ndarray:
    """Logarithmic sideband grid from lo*kappa to hi*kappa [rad/s]."""
    return np.logspace(np.log10(lo), np.log10(hi), count) * kappa
