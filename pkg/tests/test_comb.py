import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal

from afcmem.comb import (CombParams, DoubleCombParams, analytic_efficiency, calibrate_depth, carve_comb,
                         dephasing_factor, effective_depth, fit_comb, shifted, superimpose)
from afcmem.errors import FitDegeneracyError, InvalidParameterError, ResolutionError
from afcmem.spectral import AbsorptionSpectrum, FrequencyGrid


def grid_for(p, margin=10e6, per_tooth=20):
    return FrequencyGrid.spanning(p.center_offset - p.bandwidth / 2 - margin,
                                  p.center_offset + p.bandwidth / 2 + margin, p.gamma / per_tooth)


def test_param_invariants():
    for bad in (dict(delta=0), dict(finesse=1.0), dict(bandwidth=1e6), dict(tooth_depth=-1),
                dict(background_d0=-0.1), dict(tooth_shape="lorentzian")):
        kw = dict(delta=15.4e6, finesse=8.7, bandwidth=100e6, tooth_depth=3.0) | bad
        with pytest.raises(InvalidParameterError):
            CombParams(**kw)


def test_tooth_count_for_15_4_MHz_comb():
    assert CombParams(15.4e6, 8.7, 100e6, 3.0).n_teeth == 7


def test_carve_rejects_coarse_or_short_grids():
    p = CombParams(15.4e6, 8.7, 100e6, 3.0)
    with pytest.raises(ResolutionError):
        carve_comb(p, FrequencyGrid.spanning(-60e6, 60e6, p.gamma / 5))
    with pytest.raises(ResolutionError):
        carve_comb(p, FrequencyGrid.spanning(-30e6, 30e6, p.gamma / 20))


def test_carved_comb_geometry():
    p = CombParams(15.4e6, 8.7, 100e6, 3.0, background_d0=0.2)
    spec = carve_comb(p, grid_for(p))
    peaks, _ = signal.find_peaks(spec.optical_depth, prominence=1.0)
    assert len(peaks) == 7
    assert np.allclose(np.diff(spec.frequencies[peaks]), p.delta, atol=spec.grid.step)
    assert spec.optical_depth.max() == pytest.approx(3.2, rel=1e-3)
    assert spec.background_d0 == 0.2


def test_tooth_fwhm_matches_delta_over_finesse():
    p = CombParams(15.4e6, 8.7, 100e6, 3.0)
    spec = carve_comb(p, grid_for(p, per_tooth=40))
    peaks, _ = signal.find_peaks(spec.optical_depth, prominence=1.0)
    widths = signal.peak_widths(spec.optical_depth, peaks, rel_height=0.5)[0] * spec.grid.step
    assert np.median(widths) == pytest.approx(p.gamma, rel=0.02)


def test_high_finesse_limit():
    areas = []
    for F in (10, 100, 1000):
        p = CombParams(15.4e6, F, 100e6, 2.0)
        spec = carve_comb(p, grid_for(p, per_tooth=12))
        assert spec.optical_depth.max() == pytest.approx(2.0, rel=1e-2)
        areas.append(spec.optical_depth.sum() * spec.grid.step)
    assert areas[0] > 9 * areas[1] > 81 * areas[2]


def test_comb_is_periodic():
    p = CombParams(6.25e6, 7.8, 80e6, 2.0)
    spec = carve_comb(p, grid_for(p))
    d = spec.optical_depth - spec.optical_depth.mean()
    xc = signal.correlate(d, d, mode="full")[len(d):]
    lag = (signal.find_peaks(xc)[0][0] + 1) * spec.grid.step
    assert lag == pytest.approx(p.delta, abs=spec.grid.step)


def test_reciprocal_spacings():
    a = CombParams(1 / 160e-9, 7.8, 80e6, 2.0)
    b = CombParams(1 / 180e-9, 7.8, 80e6, 2.0)
    assert a.delta == pytest.approx(6.25e6)
    assert b.delta == pytest.approx(5.5556e6, rel=1e-5)
    assert a.storage_time == pytest.approx(160e-9)


def _double(delta_f=0.0, **kw):
    a = CombParams(1 / 160e-9, 7.8, 80e6, 2.0, 0.1)
    b = CombParams(1 / 180e-9, 7.8 * 160 / 180, 80e6, 2.0, 0.1)
    return DoubleCombParams(a, b, delta_f, **kw)


def _fine_grid():
    return FrequencyGrid.spanning(-60e6, 60e6, 40e3)


def test_superimpose_with_zero_weight_is_shifted_single_comb():
    dp = _double(delta_f=0.3e6, weight_b=0.0)
    g = _fine_grid()
    one = carve_comb(shifted(dp.comb_a, 0.3e6), g)
    assert superimpose(dp, g) == one


def test_superimpose_matches_pointwise_sum():
    dp = _double(delta_f=0.17e6, max_depth=3.0)
    g = _fine_grid()
    f = g.values
    oracle = np.zeros_like(f)
    for p, shift in ((dp.comb_a, dp.delta_f), (dp.comb_b, 0.0)):
        for c in p.tooth_centers + shift:
            oracle += p.tooth_depth * 2.0 ** (-((2 * (f - c) / p.gamma) ** 2))
    oracle = np.minimum(oracle, 3.0) + 0.1
    assert np.allclose(superimpose(dp, g).optical_depth, oracle, atol=1e-12)


def test_superimpose_clips_at_single_comb_peak_by_default():
    spec = superimpose(_double(), _fine_grid())
    assert spec.structured_depth.max() <= 2.0 + 1e-12


def test_superimpose_is_commutative_without_shift():
    dp = _double()
    swapped = DoubleCombParams(dp.comb_b, dp.comb_a)
    assert superimpose(dp, _fine_grid()) == superimpose(swapped, _fine_grid())


# ---- efficiency law ----------------------------------------------------------

def test_zero_depth_gives_zero_efficiency():
    assert analytic_efficiency(0.0, 8.7, 0.1, 1.8e6, 65e-9) == 0.0


def test_prefactor_maximum_at_two():
    F = 8.7
    d = np.linspace(0.1, 60, 20001)
    eta = analytic_efficiency(d, F, 0.0, 0.0, 0.0)
    k = np.argmax(eta)
    assert effective_depth(d[k], F) == pytest.approx(2.0, abs=1e-2)
    assert eta[k] == pytest.approx(4 * np.exp(-2), rel=1e-6)


def test_dephasing_factor_direct_evaluation():
    g_t = 2 * np.pi * 1.8e6 / np.sqrt(8 * np.log(2))
    assert dephasing_factor(1.8e6, 65e-9) == pytest.approx(np.exp(-(g_t * 65e-9) ** 2), rel=1e-14)


def test_calibration_hits_10_9_percent_at_65_ns():
    F = 15.4 / 1.8
    for d0 in (0.0, 0.2, 0.5):
        d = calibrate_depth(0.109, 65e-9, 1.8e6, F, d0)
        assert analytic_efficiency(d, F, d0, 1.8e6, 65e-9) == pytest.approx(0.109, rel=1e-10)
        assert effective_depth(d, F) <= 2.0


def test_calibration_rejects_unreachable_targets():
    with pytest.raises(InvalidParameterError):
        calibrate_depth(0.6, 65e-9, 1.8e6, 8.0)


def test_negative_inputs_rejected():
    with pytest.raises(InvalidParameterError):
        analytic_efficiency(1.0, 8.7, -0.1, 1e6, 1e-7)
    with pytest.raises(InvalidParameterError):
        analytic_efficiency(1.0, 0.9, 0.0, 1e6, 1e-7)


pos = st.floats(0.1, 40.0)


@given(d=pos, F=st.floats(1.5, 30), d0=st.floats(0, 3), gamma=st.floats(1e4, 5e6),
       t1=st.floats(1e-9, 1e-6), dt=st.floats(1e-9, 1e-6))
def test_efficiency_decreases_in_time(d, F, d0, gamma, t1, dt):
    a = analytic_efficiency(d, F, d0, gamma, t1)
    b = analytic_efficiency(d, F, d0, gamma, t1 + dt)
    assert b < a or (a == 0 and b == 0)


@given(d=pos, F=st.floats(1.5, 30), d0=st.floats(0, 3), dd0=st.floats(1e-3, 3))
def test_efficiency_decreases_in_background(d, F, d0, dd0):
    assert analytic_efficiency(d, F, d0 + dd0, 1e6, 1e-7) < analytic_efficiency(d, F, d0, 1e6, 1e-7)


@given(F1=st.floats(2, 20), dF=st.floats(0.5, 20), t=st.floats(1e-9, 1e-6))
def test_higher_finesse_decays_slower(F1, dF, t):
    delta = 15.4e6

    def shape(F):
        g = delta / F
        return analytic_efficiency(5.0, F, 0.0, g, t) / analytic_efficiency(5.0, F, 0.0, g, 0.0)

    assert shape(F1 + dF) > shape(F1)


# ---- fitting -------------------------------------------------------------------

def test_fit_recovers_carved_comb():
    p = CombParams(15.4e6, 8.7, 100e6, 3.0, 0.15, 1e6)
    fit = fit_comb(carve_comb(p, grid_for(p)))
    q = fit.params
    assert q.delta == pytest.approx(p.delta, rel=1e-2)
    assert q.finesse == pytest.approx(p.finesse, rel=1e-2)
    assert q.tooth_depth == pytest.approx(p.tooth_depth, rel=1e-2)
    assert q.background_d0 == pytest.approx(p.background_d0, rel=1e-2)
    assert fit.n_peaks == 7


def test_fit_tolerates_one_percent_noise():
    p = CombParams(15.4e6, 8.7, 100e6, 3.0, 0.15)
    spec = carve_comb(p, grid_for(p))
    rng = np.random.default_rng(3)
    noisy = AbsorptionSpectrum(spec.grid, spec.optical_depth + rng.normal(0, 0.03, spec.grid.count)
                               .clip(-0.15, None), spec.background_d0)
    q = fit_comb(noisy).params
    for attr in ("delta", "finesse", "tooth_depth"):
        assert getattr(q, attr) == pytest.approx(getattr(p, attr), rel=0.05)


@pytest.mark.parametrize("F", [8.7, 14.5])
def test_fit_distinguishes_finesse(F):
    p = CombParams(5.5e6, F, 60e6, 2.0, 0.1)
    assert fit_comb(carve_comb(p, grid_for(p))).params.finesse == pytest.approx(F, abs=0.5)


def test_fit_needs_three_teeth():
    p = CombParams(15.4e6, 8.7, 15.4e6, 3.0)
    with pytest.raises(FitDegeneracyError):
        fit_comb(carve_comb(p, grid_for(p)))
