import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrepr.errors import RangeError, ValidationError
from kerrepr.params import (
    TWO_PI,
    IndexTable,
    PumpDrive,
    ResonatorParams,
    cold_detuning,
    derived_rates,
    mode_volume,
    phase_mismatch,
    resonance_frequency,
)
from kerrepr.presets import ANOMALOUS, DEFAULT_DRIVES, NORMAL, QUOTED_ETA, default_drive, preset

from oracles import C_LIGHT, HBAR


def test_intrinsic_loss_rate_of_anomalous_ring():
    r = derived_rates(ANOMALOUS)
    assert r.kappa0 == pytest.approx(1.21e9, rel=0.01)


@pytest.mark.parametrize("p", [ANOMALOUS, NORMAL])
def test_rate_identities(p):
    r = derived_rates(p)
    assert abs(r.kappa - r.kappa0 * (1 + p.r)) / r.kappa < 1e-14
    assert abs(r.kappa - (r.kappa0 + r.kappa_ex)) / r.kappa < 1e-14
    inv_q = 1 / p.q0 + 1 / r.q_ex
    assert abs(1 / r.q_total - inv_q) / inv_q < 1e-12


def test_kerr_shift_matches_hand_arithmetic():
    p = ANOMALOUS
    w0 = 2 * math.pi * 193.251e12
    v = 1.10e-12 * 2 * math.pi * 23e-6
    expected = HBAR * w0**2 * C_LIGHT * 2.6e-19 / (2.0**2 * v)
    assert derived_rates(p).eta == pytest.approx(expected, rel=1e-12)
    assert mode_volume(p) == pytest.approx(v, rel=1e-15)


def test_kerr_shift_scales_inverse_with_volume():
    e1 = derived_rates(ANOMALOUS).eta
    e2 = derived_rates(replace(ANOMALOUS, radius=2 * ANOMALOUS.radius)).eta
    assert abs(e2 / e1 - 0.5) < 1e-12


def test_eta_override_bypasses_mode_volume():
    p = replace(ANOMALOUS, eta=QUOTED_ETA["anomalous"])
    assert derived_rates(p).eta == QUOTED_ETA["anomalous"]


def test_cold_detuning_even_and_affine_in_l_squared():
    p = ANOMALOUS
    s = TWO_PI * 8e9
    assert cold_detuning(p, s, 0) == s
    for l in range(1, 8):
        assert cold_detuning(p, s, l) == cold_detuning(p, s, -l)
    xs = np.array([1.0, 4.0, 16.0])
    ys = np.array([cold_detuning(p, s, l) for l in (1, 2, 4)])
    slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
    assert ys[2] == pytest.approx(ys[0] + slope * (xs[2] - xs[0]), rel=1e-14)
    assert slope == pytest.approx(0.5 * p.d2, rel=1e-12)


def test_resonance_frequency_grid():
    p = NORMAL
    assert resonance_frequency(p, 0) == p.omega0
    for l in (-3, 1, 5):
        d_int = resonance_frequency(p, l) - p.omega0 - p.d1 * l
        assert d_int == pytest.approx(0.5 * p.d2 * l * l, rel=1e-6)


def test_phase_mismatch_constant_index_vanishes():
    w = np.linspace(1.0e15, 1.5e15, 11)
    table = IndexTable(tuple(w), tuple([2.0] * w.size))
    wp, ws = 1.2e15, 1.1e15
    assert abs(phase_mismatch(table, wp, ws, 2 * wp - ws)) < 1e-6


def test_phase_mismatch_linear_index_hand_expansion():
    # n(w) = a + b w: dk = [2 wp (a + b wp) - ws (a + b ws) - wi (a + b wi)] / c
    #                    = b (2 wp^2 - ws^2 - wi^2) / c when 2 wp = ws + wi
    a, b = 1.9, 2e-17
    w_lo, w_hi = 1.0e15, 1.5e15
    table = IndexTable((w_lo, w_hi), (a + b * w_lo, a + b * w_hi))
    wp, delta = 1.25e15, 0.1e15
    ws, wi = wp + delta, wp - delta
    expected = b * (2 * wp**2 - ws**2 - wi**2) / C_LIGHT
    assert phase_mismatch(table, wp, ws, wi) == pytest.approx(expected, rel=1e-6)
    assert expected == pytest.approx(-2 * b * delta**2 / C_LIGHT, rel=1e-9)


def test_phase_mismatch_degenerate_is_zero():
    w = np.linspace(1.0e15, 1.5e15, 7)
    table = IndexTable(tuple(w), tuple(1.9 + 0.3 * np.sin(w / 1e14)))
    assert phase_mismatch(table, 1.3e15, 1.3e15, 1.3e15) == 0.0


def test_phase_mismatch_errors():
    w = np.linspace(1.0e15, 1.5e15, 51)
    table = IndexTable(tuple(w), tuple(2.0 + 1e-17 * w))
    with pytest.raises(RangeError):
        phase_mismatch(table, 1.45e15, 1.6e15, 1.3e15)
    with pytest.raises(ValidationError):
        phase_mismatch(table, 1.2e15, 1.3e15, 1.0e15)


@pytest.mark.parametrize("field", ["f0", "fsr", "q0", "r", "radius", "a_eff", "n2"])
def test_nonpositive_fields_rejected(field):
    with pytest.raises(ValidationError) as exc:
        replace(ANOMALOUS, **{field: 0.0})
    assert exc.value.field == field


def test_other_invalid_params():
    with pytest.raises(ValidationError):
        replace(ANOMALOUS, n0=0.5)
    with pytest.raises(ValidationError):
        replace(ANOMALOUS, d2=math.inf)
    with pytest.raises(ValidationError):
        replace(ANOMALOUS, eta=-1.0)


def test_drive_validation_and_conversion():
    p = ANOMALOUS
    d = PumpDrive(sigma_c=TWO_PI * 8e9, mode_l=4, a_in=1e10)
    photon = HBAR * (p.omega0 - TWO_PI * 8e9)
    assert d.power(p) == pytest.approx(1e20 * photon, rel=1e-9)
    back = PumpDrive(sigma_c=d.sigma_c, mode_l=4, p_in=d.power(p))
    assert back.amplitude(p) == pytest.approx(1e10, rel=1e-12)
    both = PumpDrive(sigma_c=d.sigma_c, mode_l=4, a_in=1e10, p_in=d.power(p))
    assert both.amplitude(p) == 1e10
    with pytest.raises(ValidationError):
        PumpDrive(sigma_c=d.sigma_c, a_in=1e10, p_in=2 * d.power(p)).amplitude(p)
    with pytest.raises(ValidationError):
        PumpDrive(sigma_c=0.0)
    with pytest.raises(ValidationError):
        PumpDrive(sigma_c=0.0, a_in=-1.0)
    with pytest.raises(ValidationError):
        PumpDrive(sigma_c=0.0, a_in=1.0, mode_l=0)


def test_index_table_validation():
    with pytest.raises(ValidationError):
        IndexTable((1.0,), (2.0,))
    with pytest.raises(ValidationError):
        IndexTable((2.0, 1.0), (2.0, 2.0))


def test_preset_snapshot():
    assert ANOMALOUS == ResonatorParams(
        f0=193.251e12,
        fsr=989.592e9,
        d2=1.435 * TWO_PI * 1e7,
        q0=1e6,
        r=1.222,
        radius=23e-6,
        a_eff=1.10e-12,
        n0=2.0,
        n2=2.6e-19,
    )
    assert ANOMALOUS.gap == 490e-9
    assert NORMAL == ResonatorParams(
        f0=193.797e12,
        fsr=1019.553e9,
        d2=-5.676 * TWO_PI * 1e8,
        q0=1e6,
        r=1.222,
        radius=23e-6,
        a_eff=0.968e-12,
        n0=2.0,
        n2=2.6e-19,
    )
    assert DEFAULT_DRIVES["anomalous"] == PumpDrive(sigma_c=TWO_PI * 8e9, mode_l=4, a_in=1e10)
    assert DEFAULT_DRIVES["normal"] == PumpDrive(sigma_c=TWO_PI * 18e9, mode_l=4, a_in=4e10)
    assert QUOTED_ETA == {"normal": 27.75, "anomalous": 20.93}


def test_preset_overrides():
    assert preset("anomalous", q0=2e6).q0 == 2e6
    assert preset("anomalous") is ANOMALOUS
    assert default_drive("normal", a_in=1.0).a_in == 1.0
    with pytest.raises(KeyError):
        preset("missing")


@settings(max_examples=200, deadline=None)
@given(
    q0=st.floats(1e4, 1e8),
    r=st.floats(0.05, 20.0),
    radius=st.floats(5e-6, 500e-6),
)
def test_rate_invariants_random(q0, r, radius):
    p = replace(ANOMALOUS, q0=q0, r=r, radius=radius)
    rates = derived_rates(p)
    assert abs(rates.kappa - rates.kappa0 * (1 + r)) / rates.kappa < 1e-14
    assert rates.kappa_ex / rates.kappa0 == pytest.approx(r, rel=1e-14)
    inv_q = 1 / q0 + 1 / rates.q_ex
    assert abs(1 / rates.q_total - inv_q) / inv_q < 1e-12
    assert rates.eta * radius == pytest.approx(derived_rates(ANOMALOUS).eta * ANOMALOUS.radius, rel=1e-12)
