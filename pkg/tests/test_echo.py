from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afcmem.bench import default_timebin_setup
from afcmem.comb import SIGMA_PER_FWHM, CombParams, analytic_efficiency, calibrate_depth, carve_comb
from afcmem.echo import (comb_frequency_grid, default_frequency_grid, echo_efficiency, echo_window,
                         simulate_timebin, simulate_trace, transfer_function_oracle)
from afcmem.errors import InvalidParameterError, RangeError, ResolutionError, SchedulingError
from afcmem.pulses import InputPulse, TimeBinQubit, TimeGrid
from afcmem.spectral import AbsorptionSpectrum, FrequencyGrid
from afcmem.stark import StarkConfig, design_retrieval_schedule, design_timebin_schedule

DELTA = 15.4e6
FIN = 8.5556
D0 = 0.2
DEPTH = calibrate_depth(0.109, 65e-9, DELTA / FIN, FIN, D0)
COMB = CombParams(DELTA, FIN, 100e6, DEPTH, D0)
TG = TimeGrid.spanning(-60e-9, 500e-9, 1e-9)
SPEC = carve_comb(COMB, comb_frequency_grid(COMB, TG))
PULSE = InputPulse(0.0, 15e-9)
GATE = 0.5 / DELTA


@pytest.fixture(scope="module")
def plain():
    return simulate_trace(SPEC, PULSE, None, TG)


@pytest.fixture(scope="module")
def born_plain():
    return simulate_trace(SPEC, PULSE, None, TG, method="born", prompt_gate=GATE)


def law(t):
    return analytic_efficiency(DEPTH, FIN, D0, COMB.gamma, t)


def test_transparent_medium_passes_input_unchanged():
    empty = AbsorptionSpectrum(SPEC.grid, np.zeros(SPEC.grid.count))
    tr = simulate_trace(empty, PULSE, None, TG)
    np.testing.assert_allclose(tr.field, PULSE.envelope(TG), atol=1e-14)
    assert echo_efficiency(tr, (-40e-9, 40e-9)) == pytest.approx(1.0, abs=1e-3)
    assert echo_efficiency(tr, (200e-9, 300e-9)) < 1e-12


def test_intensity_is_field_modulus_squared(plain):
    np.testing.assert_allclose(plain.intensity, np.abs(plain.field) ** 2, rtol=1e-12)
    assert np.all(np.isfinite(plain.intensity))


def test_matches_frequency_domain_oracle(plain):
    ref = transfer_function_oracle(SPEC, PULSE.envelope(TG), TG, pad=8)
    # the oracle wraps a little acausal leakage into the first samples
    m = TG.values > -20e-9
    err = np.abs(ref - plain.field)[m].max() / np.abs(plain.field).max()
    assert err < 5e-3


def test_passivity(plain):
    total = echo_efficiency(plain, (TG.start, TG.stop + TG.step))
    assert total <= 1 + 1e-6
    parts = [echo_efficiency(plain, (-40e-9, 0.5 / DELTA))]
    parts += [echo_efficiency(plain, echo_window(n, DELTA)) for n in range(1, 7)]
    assert sum(parts) <= 1 + 1e-6


def test_first_echo_follows_efficiency_law(plain):
    eta = echo_efficiency(plain, echo_window(1, DELTA))
    assert eta == pytest.approx(law(1 / DELTA), rel=0.05)
    assert eta == pytest.approx(0.109, rel=1e-3)


def test_echo_timing(born_plain):
    t = TG.values
    for n in range(1, 7):
        lo, hi = echo_window(n, DELTA)
        sel = (t >= lo) & (t < hi)
        peak = t[sel][np.argmax(born_plain.intensity[sel])]
        assert abs(peak - n / DELTA) <= 1 / COMB.bandwidth


def test_decay_envelope(born_plain):
    n = np.arange(1, 7)
    eta = np.array([echo_efficiency(born_plain, echo_window(k, DELTA)) for k in n])
    slope = np.polyfit((n / DELTA) ** 2, np.log(eta), 1)[0]
    gt = 2 * np.pi * COMB.gamma * SIGMA_PER_FWHM
    assert slope == pytest.approx(-gt**2, rel=0.05)
    np.testing.assert_allclose(eta, law(n / DELTA), rtol=0.01)


def test_bin_refinement_converged(plain):
    fine = carve_comb(COMB, comb_frequency_grid(COMB, TG, points_per_tooth=24))
    tr = simulate_trace(fine, PULSE, None, TG)
    w = echo_window(1, DELTA)
    assert echo_efficiency(tr, w) == pytest.approx(echo_efficiency(plain, w), rel=0.01)


@settings(max_examples=10)
@given(re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_linearity(re, im):
    a = complex(re, im)
    base = simulate_trace(SPEC, PULSE, None, TG, z_steps=8).field
    scaled = simulate_trace(SPEC, replace(PULSE, amplitude=a), None, TG, z_steps=8).field
    np.testing.assert_allclose(scaled, a * base, rtol=1e-9, atol=1e-12 * max(abs(a), 1))


@pytest.mark.parametrize("n_target", [2, 3, 4])
def test_on_demand_readout(plain, born_plain, n_target):
    sched = design_retrieval_schedule(DELTA, n_target)
    tr = simulate_trace(SPEC, PULSE, sched, TG)
    for n in range(1, n_target):
        w = echo_window(n, DELTA)
        assert tr.window_energy(w) <= 1e-4 * plain.window_energy(w)
    # recovered echo equals the unsilenced single-scattering value at that order
    w = echo_window(n_target, DELTA)
    assert echo_efficiency(tr, w) == pytest.approx(echo_efficiency(born_plain, w), rel=0.01)
    assert echo_efficiency(tr, w) == pytest.approx(law(n_target / DELTA), rel=0.01)
    later = [tr.window_energy(echo_window(n, DELTA)) for n in range(1, 7) if n != n_target]
    assert max(later) < tr.window_energy(w)


def test_born_silencing(born_plain):
    sched = design_retrieval_schedule(DELTA, 3)
    tr = simulate_trace(SPEC, PULSE, sched, TG, method="born", prompt_gate=GATE)
    w = echo_window(1, DELTA)
    assert tr.window_energy(w) <= 1e-4 * born_plain.window_energy(w)


def test_long_storage_echo_at_n_over_delta():
    comb = CombParams(1 / 160e-9, 7.8, 100e6, 3.0, 0.2)
    tg = TimeGrid.spanning(-40e-9, 900e-9, 1e-9)
    spec = carve_comb(comb, comb_frequency_grid(comb, tg))
    tr = simulate_trace(spec, InputPulse(0, 12e-9), design_retrieval_schedule(comb.delta, 5), tg)
    t = tg.values
    sel = t > 80e-9
    assert t[sel][np.argmax(tr.intensity[sel])] == pytest.approx(800e-9, abs=2e-9)


def test_static_inhomogeneity_leaves_recovery_flat():
    w = echo_window(3, DELTA)
    vals = []
    for sigma in (0.0, 0.05, 0.1, 0.2):
        sched = design_retrieval_schedule(DELTA, 3, StarkConfig(inhomogeneity=sigma))
        vals.append(echo_efficiency(simulate_trace(SPEC, PULSE, sched, TG), w))
    assert np.ptp(vals) < 1e-6 * vals[0]


def test_resolution_errors():
    coarse = TimeGrid.spanning(-60e-9, 500e-9, 5e-9)
    with pytest.raises(ResolutionError):
        simulate_trace(SPEC, PULSE, None, coarse)
    narrow = AbsorptionSpectrum(FrequencyGrid.spanning(-5e6, 5e6, 0.1e6), np.ones(101))
    with pytest.raises(ResolutionError):
        simulate_trace(narrow, PULSE, None, TG)
    with pytest.raises(ResolutionError):
        # frequency step too coarse for the time span
        simulate_trace(carve_comb(COMB, FrequencyGrid.spanning(-70e6, 70e6, 0.5e6)), PULSE, None, TG)


def test_window_errors(plain):
    with pytest.raises(RangeError):
        echo_efficiency(plain, (100e-9, 100e-9))
    with pytest.raises(RangeError):
        echo_efficiency(plain, (400e-9, 900e-9))
    with pytest.raises(InvalidParameterError):
        simulate_trace(SPEC, PULSE, None, TG, method="born")
    with pytest.raises(InvalidParameterError):
        simulate_trace(SPEC, PULSE, None, TG, method="maxwell")


# time-bin storage in the double comb

@pytest.fixture(scope="module")
def fringe():
    s = default_timebin_setup(weight_a=1.0, delta_beta_error=0.0)
    tg, dbl = s.time_grid(), s.double
    sched = design_timebin_schedule(dbl.comb_a.delta, dbl.comb_b.delta, s.separation, 2, s.stark, s.T_p)
    fg = default_frequency_grid(dbl, tg, margin=21e6)
    T = 2 / dbl.comb_a.delta

    def run(df, alpha=0.0):
        return simulate_timebin(replace(dbl, delta_f=df), TimeBinQubit(alpha), sched, tg, 2, fg)
    return T, run


def test_fringe_law(fringe):
    T, run = fringe
    assert T == pytest.approx(320e-9)
    dfs = np.linspace(-1 / T, 1 / T, 17)
    traces = [run(df) for df in dfs]
    I = np.array([tr.window_energy(tr.windows["interference"]) for tr in traces])
    X = np.column_stack([np.ones_like(dfs), np.cos(2 * np.pi * dfs * T), np.sin(2 * np.pi * dfs * T)])
    c = np.linalg.lstsq(X, I, rcond=None)[0]
    # no phase offset: delta_beta = 2 pi delta_f T
    assert abs(np.arctan2(c[2], c[1])) < 0.01
    ea = traces[8].window_energy(traces[8].windows["side_early"])
    eb = traces[8].window_energy(traces[8].windows["side_late"])
    assert np.hypot(c[1], c[2]) / c[0] == pytest.approx(2 * np.sqrt(ea * eb) / (ea + eb), rel=0.02)


def test_half_period_shift_flips_fringe(fringe):
    T, run = fringe
    on, off = run(0.0), run(1 / (2 * T))
    w = on.windows["interference"]
    assert off.window_energy(w) < 0.01 * on.window_energy(w)
    # the same flip through the input phase
    flipped = run(0.0, alpha=np.pi)
    assert flipped.window_energy(w) == pytest.approx(off.window_energy(w), abs=1e-3 * on.window_energy(w))


def test_timebin_windows_and_separation_check():
    s = default_timebin_setup()
    tg = s.time_grid()
    tr = simulate_timebin(s.double, TimeBinQubit(0.0), None, tg)
    w = tr.windows
    assert w["side_early"] == pytest.approx((310e-9, 330e-9))
    assert w["interference"] == pytest.approx((350e-9, 370e-9))
    assert w["side_late"] == pytest.approx((390e-9, 410e-9))
    with pytest.raises(SchedulingError, match="delay difference"):
        simulate_timebin(s.double, TimeBinQubit(0.0, separation=60e-9), None, tg)
