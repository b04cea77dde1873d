import math
from dataclasses import replace

import numpy as np
import pytest

from kerrepr.errors import ContinuationError, SteadyStateError, ThresholdError, ValidationError
from kerrepr.params import TWO_PI, PumpDrive, derived_rates
from kerrepr.presets import ANOMALOUS, NORMAL, QUOTED_ETA, default_drive, preset
from kerrepr.steady_state import (
    AboveThresholdCurve,
    NormalizedDrive,
    Stage,
    all_states,
    below_threshold_roots,
    check_state,
    classify_stages,
    denormalize_drive,
    fold_points,
    growth_rate,
    is_stable,
    max_residual,
    normalize_drive,
    power_scale,
    residuals,
    solve_above_threshold,
    solve_below_threshold,
    stage_state,
    threshold_f2,
    threshold_power,
)

from oracles import bisect, cubic_root_count, cubic_roots_closed_form, newton_full

ANOM_DRIVE = default_drive("anomalous")


def test_normalized_drive_arithmetic():
    rates = derived_rates(ANOMALOUS)
    k, kex, eta = rates.kappa, rates.kappa_ex, rates.eta
    nd = normalize_drive(ANOMALOUS, ANOM_DRIVE)
    assert nd.f == pytest.approx(math.sqrt(2 * kex * eta / k**3) * 1e10, rel=1e-13)
    assert nd.zeta0 == pytest.approx(2 * math.pi * 8e9 / k, rel=1e-13)
    assert nd.delta_l - nd.zeta0 == pytest.approx(0.5 * ANOMALOUS.d2 * 16 / k, rel=1e-12)


def test_power_and_amplitude_drives_normalize_identically():
    p = ANOMALOUS
    d = ANOM_DRIVE
    nd_a = normalize_drive(p, d)
    nd_p = normalize_drive(p, PumpDrive(sigma_c=d.sigma_c, mode_l=4, p_in=d.power(p)))
    assert nd_p.f == pytest.approx(nd_a.f, rel=1e-12)


def test_denormalize_round_trip():
    for name in ("anomalous", "normal"):
        p, d = preset(name), default_drive(name)
        nd = normalize_drive(p, d)
        back = denormalize_drive(p, nd)
        assert back.mode_l == d.mode_l
        assert back.sigma_c == pytest.approx(d.sigma_c, rel=1e-13)
        assert back.a_in == pytest.approx(d.a_in, rel=1e-13)


def test_zero_drive_single_root():
    roots = below_threshold_roots(0.0, 3.0)
    assert roots == [0.0]
    states = solve_below_threshold(NormalizedDrive(f=0.0, zeta0=3.0, delta_l=4.0, d3_over_2=1.0))
    assert len(states) == 1 and states[0].a_p == 0.0


def test_three_roots_match_closed_form_cubic():
    zeta = 3.0
    lo, hi = fold_points(zeta)
    g = lambda x: x * (1 + (zeta - x) ** 2)
    f2_lo, f2_hi = g(hi), g(lo)
    for f2 in np.linspace(f2_lo, f2_hi, 9)[1:-1]:
        roots = below_threshold_roots(math.sqrt(f2), zeta)
        ref = cubic_roots_closed_form(f2, zeta)
        assert len(roots) == 3
        assert np.allclose(roots, ref, rtol=0, atol=1e-10)


def test_zero_detuning_root_matches_bisection():
    x = bisect(lambda x: x * (1 + x * x) - 1.0, 0.0, 1.0)
    assert below_threshold_roots(1.0, 0.0) == [pytest.approx(x, abs=1e-14)]


def test_cubic_roots_random_against_closed_form():
    rng = np.random.default_rng(7)
    for _ in range(2000):
        zeta = rng.uniform(-5, 10)
        f = rng.uniform(0, 8)
        roots = below_threshold_roots(f, zeta)
        assert len(roots) == cubic_root_count(f * f, zeta)
        ref = cubic_roots_closed_form(f * f, zeta)
        assert np.allclose(roots, ref, rtol=1e-10, atol=1e-10)


def test_above_threshold_absent_below_onset():
    nd = normalize_drive(ANOMALOUS, ANOM_DRIVE)
    curve = AboveThresholdCurve(nd.zeta0, nd.delta_l)
    f2_min, _ = curve.f2_range()
    assert solve_above_threshold(nd.with_f(0.99 * math.sqrt(f2_min))) == []
    small = NormalizedDrive(f=5.0, zeta0=0.5, delta_l=1.0, d3_over_2=0.5)
    assert solve_above_threshold(small) == []


def _sample_states(rng, count):
    out = []
    while len(out) < count:
        zeta = rng.uniform(-1, 6)
        delta = zeta + rng.uniform(0.2, 3)
        curve = AboveThresholdCurve(zeta, delta)
        if curve.exists:
            f2_min, f2_max = curve.f2_range()
            f = math.sqrt(rng.uniform(0.2 * f2_min, 1.2 * f2_max))
        else:
            f = rng.uniform(0, 5)
        nd = NormalizedDrive(f=f, zeta0=zeta, delta_l=delta, d3_over_2=delta - zeta)
        out.extend((nd, s) for s in all_states(nd, curve))
    return out


def test_every_state_satisfies_all_relations():
    rng = np.random.default_rng(3)
    states = _sample_states(rng, 400)
    n_above = 0
    for nd, s in states:
        assert max_residual(s, nd) < 1e-9
        if s.above_threshold:
            n_above += 1
            x = s.a_p**2
            assert x >= 1 - 1e-12
            assert abs(math.sin(s.theta_cap) * x - 1) < 1e-9
    assert n_above > 50


def test_check_state_rejects_perturbed_state():
    nd = normalize_drive(ANOMALOUS, ANOM_DRIVE)
    s = solve_below_threshold(nd)[0]
    check_state(s, nd)
    with pytest.raises(SteadyStateError):
        check_state(replace(s, a_p=s.a_p * (1 + 1e-6)), nd)
    assert residuals(s, nd).shape == (6,)


def newton_check(nd, state, rng, spread=0.01):
    """Newton on the unreduced equations from a perturbed copy of ``state``."""
    z0 = state.fields() * (1 + spread * (rng.standard_normal(3) + 1j * rng.standard_normal(3)))
    z, res = newton_full(z0, nd.f, nd.zeta0, nd.delta_l)
    assert res < 1e-12
    return max(abs(abs(z[0]) - state.a_p), abs(abs(z[1]) - state.a_si), abs(abs(z[2]) - state.a_si))


def test_above_threshold_branch_matches_newton_sweep():
    nd = normalize_drive(ANOMALOUS, ANOM_DRIVE)
    curve = AboveThresholdCurve(nd.zeta0, nd.delta_l)
    f2_min, f2_max = curve.f2_range()
    rng = np.random.default_rng(11)
    checked = 0
    for f in np.sqrt(np.linspace(f2_min, f2_max, 42)[1:-1]):
        ours = curve.solve(f)
        assert ours
        for s in ours:
            assert newton_check(nd.with_f(f), s, rng) < 1e-7
            checked += 1
    assert checked >= 40


def test_stability_of_below_threshold_roots_follows_slope():
    nd = normalize_drive(ANOMALOUS, ANOM_DRIVE)
    states = solve_below_threshold(nd)
    assert len(states) == 3
    for s in states:
        x = s.a_p**2
        slope = 1 + (nd.zeta0 - x) ** 2 - 2 * x * (nd.zeta0 - x)
        if slope < 0:
            assert not is_stable(s, nd)
    # the upper bistable root is the stage-IV state and is linearly stable
    assert growth_rate(states[-1], nd) < 0


def test_stages_without_hysteresis_coincide():
    grid = np.linspace(0, 2e9, 21)
    table = classify_stages(ANOMALOUS, ANOM_DRIVE.sigma_c, 4, grid)
    for a, entries in table:
        labels = sorted(s.stage.value for s in entries)
        assert labels == ["I", "IV"]
        assert entries[0].a_p == entries[1].a_p


def test_stage_count_matches_root_enumeration():
    grid = np.linspace(0, 4e10, 81)
    p, sc = ANOMALOUS, ANOM_DRIVE.sigma_c
    base = normalize_drive(p, PumpDrive(sigma_c=sc, mode_l=4, a_in=1.0))
    for a, entries in classify_stages(p, sc, 4, grid):
        nd = base.with_f(base.f * a)
        below = cubic_roots_closed_form(nd.f**2, nd.zeta0) if a > 0 else [0.0]
        above = AboveThresholdCurve(nd.zeta0, nd.delta_l).solve(nd.f)
        distinct = {(s.a_p, s.a_si) for s in entries}
        assert len(distinct) == len(below) + len(above)
        assert 1 <= len({s.stage for s in entries if s.stage != Stage.UNSTABLE}) <= 3


def test_upward_and_downward_sweeps_agree_on_single_branch():
    grid = np.linspace(0, 4e10, 81)
    for a, entries in classify_stages(ANOMALOUS, ANOM_DRIVE.sigma_c, 4, grid):
        stable = [s for s in entries if s.stage != Stage.UNSTABLE]
        if len({(s.a_p, s.a_si) for s in stable}) == 1:
            assert {s.stage for s in stable} >= {Stage.I, Stage.IV} or stable[0].above_threshold


def test_normal_dispersion_pump_curve_shape():
    d = default_drive("normal")
    grid = np.linspace(0, 8e10, 161)
    table = classify_stages(NORMAL, d.sigma_c, 4, grid)
    by_stage = {s: [] for s in Stage}
    for a, entries in table:
        for s in entries:
            by_stage[s.stage].append((a, s.a_p))
    for stage in (Stage.I, Stage.IV):
        amps = np.array([ap for _, ap in by_stage[stage]])
        assert np.all(np.diff(amps) >= -1e-12)
    # S-shape: a coexisting unstable middle root and a sharp upward jump of stage I
    assert by_stage[Stage.UNSTABLE]
    jumps = np.diff([ap for _, ap in by_stage[Stage.I]])
    assert jumps.max() > 10 * np.median(jumps)
    # above-threshold stable states exist with a pump clamped to a narrow band
    above = [ap for _, ap in by_stage[Stage.III]]
    assert above
    nd = normalize_drive(NORMAL, d)
    assert np.ptp(np.square(above)) < nd.delta_l


def test_stage_two_reached_on_upward_sweep():
    p = ANOMALOUS
    sc = 1.5 * derived_rates(p).kappa
    base = normalize_drive(p, PumpDrive(sigma_c=sc, mode_l=6, a_in=1.0))
    grid = np.linspace(0, 3 * math.sqrt(threshold_f2(base)) / base.f, 121)
    stages = {s.stage for _, es in classify_stages(p, sc, 6, grid) for s in es}
    assert {Stage.I, Stage.II, Stage.III, Stage.IV} <= stages


def test_classify_stages_validation_and_gap():
    with pytest.raises(ValidationError):
        classify_stages(ANOMALOUS, ANOM_DRIVE.sigma_c, 4, [1.0])
    with pytest.raises(ValidationError):
        classify_stages(ANOMALOUS, ANOM_DRIVE.sigma_c, 4, [2.0, 1.0])
    with pytest.raises(ContinuationError):
        classify_stages(ANOMALOUS, ANOM_DRIVE.sigma_c, 4, np.linspace(0, 4e10, 5), budget=10)


def test_stage_state_lookup():
    s = stage_state(ANOMALOUS, ANOM_DRIVE, Stage.IV)
    assert s.stage == Stage.IV and not s.above_threshold
    lower = stage_state(ANOMALOUS, ANOM_DRIVE, Stage.I)
    assert lower.a_p < s.a_p
    zero = stage_state(ANOMALOUS, replace(ANOM_DRIVE, a_in=0.0), "IV")
    assert zero.a_p == 0.0


def test_threshold_increases_with_q0():
    sc = TWO_PI * 3e9
    p1 = threshold_power(ANOMALOUS, sc, 1)
    p2 = threshold_power(preset("anomalous", q0=2e6), sc, 1)
    assert p2 > p1


def test_threshold_halves_when_eta_doubles():
    sc = TWO_PI * 8e9
    eta = derived_rates(ANOMALOUS).eta
    p1 = threshold_power(preset("anomalous", eta=eta), sc, 4, ceiling=1e3)
    p2 = threshold_power(preset("anomalous", eta=2 * eta), sc, 4, ceiling=1e3)
    assert abs(p2 / p1 - 0.5) < 1e-6


def test_threshold_invariant_under_drive_representation():
    sc = TWO_PI * 8e9
    pth = threshold_power(ANOMALOUS, sc, 4, ceiling=1e3)
    d_p = PumpDrive(sigma_c=sc, mode_l=4, p_in=pth)
    d_a = PumpDrive(sigma_c=sc, mode_l=4, a_in=d_p.amplitude(ANOMALOUS))
    f_p = normalize_drive(ANOMALOUS, d_p).f
    f_a = normalize_drive(ANOMALOUS, d_a).f
    assert abs(f_p / f_a - 1) < 1e-9
    nd = normalize_drive(ANOMALOUS, d_p)
    assert abs(f_p**2 / threshold_f2(nd) - 1) < 1e-9
    assert abs(pth / (threshold_f2(nd) * power_scale(ANOMALOUS, sc)) - 1) < 1e-12


def test_threshold_normal_below_anomalous_with_quoted_eta():
    sc = TWO_PI * 8e9
    pn = threshold_power(preset("normal", eta=QUOTED_ETA["normal"]), sc, 1, ceiling=1e6)
    pa = threshold_power(preset("anomalous", eta=QUOTED_ETA["anomalous"]), sc, 1, ceiling=1e6)
    assert pn < pa


def test_threshold_errors():
    sc = TWO_PI * 8e9
    with pytest.raises(ThresholdError) as exc:
        threshold_power(ANOMALOUS, sc, 4, ceiling=1e-9)
    assert exc.value.ceiling == 1e-9
    with pytest.raises(ThresholdError):
        threshold_power(ANOMALOUS, -TWO_PI * 20e9, 1)
    with pytest.raises(ValidationError):
        threshold_power(ANOMALOUS, sc, 0)
