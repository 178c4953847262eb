import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solidhhg.errors import NumericsWarning, UsageError
from solidhhg.spectrum import (
    CurrentTrace,
    PeakTable,
    current_contribution,
    cutoff_estimate,
    even_odd_ratios,
    fft_length,
    harmonic_peaks,
    net_current,
    parseval_sides,
    plateau_orders,
    power_spectrum,
)

OMEGA = 0.0152  # close to the 3 um carrier in atomic units


def tone_trace(h=3, cycles=20, per_cycle=64):
    period = 2 * math.pi / OMEGA
    n = cycles * per_cycle
    t = np.arange(n) * (period / per_cycle)
    return CurrentTrace(t, np.sin(h * OMEGA * t), 1)


def table(heights, floor=1e-20):
    heights = np.asarray(heights, dtype=float)
    return PeakTable(np.arange(1, len(heights) + 1), heights, floor)


def test_pure_tone_lands_on_its_harmonic():
    spec = power_spectrum(tone_trace(), OMEGA, window="rect", pad_factor=1)
    peaks = harmonic_peaks(spec)
    assert int(np.argmax(peaks.heights)) + 1 == 3
    others = np.delete(peaks.heights, 2)
    assert np.max(others) < 1e-20 * peaks.height(3)


def test_pure_tone_amplitude():
    # rect window over whole cycles: |dt sum sin(w t) e^{-i w t}| = n dt / 2
    tr = tone_trace()
    spec = power_spectrum(tr, OMEGA, window="rect", pad_factor=1)
    n, dt = len(tr.t), tr.t[1]
    assert harmonic_peaks(spec).height(3) == pytest.approx((n * dt / 2) ** 2, rel=1e-12)


@pytest.mark.parametrize("window,pad", [("hann", 4), ("rect", 1), ("rect", 3)])
def test_parseval(rng, window, pad):
    t = np.arange(3001) * 0.8
    tr = CurrentTrace(t, rng.normal(size=t.size), 1)
    lhs, rhs = parseval_sides(power_spectrum(tr, OMEGA, window, pad), tr)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_padding_refines_axis_only():
    tr = tone_trace()
    a = power_spectrum(tr, OMEGA, "hann", 1)
    b = power_spectrum(tr, OMEGA, "hann", 4)
    assert len(b.order) > 4 * (len(a.order) - 1)
    assert b.order[-1] == pytest.approx(a.order[-1])


@pytest.mark.parametrize("n,pad,expected", [(100, 1, 100), (100, 4, 512), (128, 4, 512), (129, 2, 512)])
def test_fft_length(n, pad, expected):
    assert fft_length(n, pad) == expected


def test_fft_length_rejects_zero_pad():
    with pytest.raises(UsageError):
        fft_length(10, 0)


def test_nonuniform_grid_rejected():
    t = np.cumsum(np.linspace(1.0, 1.1, 500))
    with pytest.raises(UsageError):
        power_spectrum(CurrentTrace(t, np.zeros_like(t), 1), OMEGA)


def test_unknown_window_rejected():
    with pytest.raises(UsageError):
        power_spectrum(tone_trace(), OMEGA, window="kaiser")


def test_coarse_resolution_rejected():
    spec = power_spectrum(tone_trace(cycles=5), OMEGA, window="rect", pad_factor=1)
    with pytest.raises(UsageError):
        harmonic_peaks(spec)


def test_max_order_truncates():
    spec = power_spectrum(tone_trace(), OMEGA, window="hann", pad_factor=4)
    assert len(harmonic_peaks(spec, max_order=7).heights) == 7


def test_empty_signal_has_no_cutoff():
    t = np.arange(4096) * 0.8
    spec = power_spectrum(CurrentTrace(t, np.zeros_like(t), 1), OMEGA)
    peaks = harmonic_peaks(spec)
    assert np.all(peaks.heights == 0.0)
    assert cutoff_estimate(peaks) is None


def test_synthetic_plateau_cutoff():
    heights = np.full(40, 1e-12)
    heights[0:11:2] = 1.0  # odd orders 1..11
    heights[12::2] = 1e-7  # odd orders from 13 on: under the 60 dB gate above the 1e-12 floor
    assert cutoff_estimate(table(heights, floor=1e-12)) == 11
    assert plateau_orders(table(heights, floor=1e-12)) == [3, 5, 7, 9, 11]


def test_short_shelf_does_not_requalify():
    heights = np.full(40, 1e-30)
    heights[0:11:2] = 1.0
    heights[12:20:2] = 1e-5  # four shelf peaks against five plateau peaks
    assert cutoff_estimate(table(heights)) == 11


def test_long_shelf_above_gate_becomes_the_plateau():
    # the running median follows whichever level holds the majority of odd peaks
    heights = np.full(40, 1e-30)
    heights[0:11:2] = 1.0
    heights[12::2] = 1e-5
    assert cutoff_estimate(table(heights)) == 39
    assert cutoff_estimate(table(heights), max_misses=2) == 11


@settings(max_examples=50, deadline=None)
@given(last=st.integers(5, 25), seed=st.integers(0, 2 ** 31))
def test_synthetic_cutoff_property(last, seed):
    rng = np.random.default_rng(seed)
    h_cut = 2 * last + 1
    heights = np.full(80, 1e-30)
    odd = np.arange(3, 80, 2)
    for h in odd:
        if h <= h_cut:
            heights[h - 1] = rng.uniform(0.5, 2.0)
        else:
            heights[h - 1] = 1e-3 ** ((h - h_cut) // 2)
    heights[0] = 10.0
    assert cutoff_estimate(table(heights)) == h_cut


def test_white_noise_has_no_cutoff(rng):
    t = np.arange(2 ** 14) * 0.8
    spec = power_spectrum(CurrentTrace(t, rng.normal(size=t.size), 1), OMEGA)
    assert cutoff_estimate(harmonic_peaks(spec)) is None


def test_too_few_peaks_above_gate():
    heights = np.full(20, 1e-30)
    heights[[0, 2, 4]] = 1.0
    assert cutoff_estimate(table(heights)) is None
    assert plateau_orders(table(heights)) == []


def test_even_odd_ratios():
    heights = np.array([10.0, 1e-3, 2.0, 1e-2, 1.0, 4.0, 8.0])
    r = even_odd_ratios(table(heights))
    assert r == {2: pytest.approx(5e-4), 4: pytest.approx(1e-2), 6: pytest.approx(4.0)}


def _contribs(rng, n_k=9, n_t=50):
    return {i: rng.normal(size=n_t) for i in range(n_k)}


def test_net_current_uses_full_grid_weight(rng):
    t = np.arange(50.0)
    c = _contribs(rng)
    tr = net_current(t, c, 9, subset=[4])
    assert np.array_equal(tr.J, c[4] / 9)
    assert tr.indices == (4,)


def test_net_current_is_order_independent(rng):
    t = np.arange(50.0)
    c = _contribs(rng)
    a = net_current(t, c, 9, subset=[7, 1, 3, 1])
    b = net_current(t, c, 9, subset=[1, 3, 7])
    assert np.array_equal(a.J, b.J) and a.indices == (1, 3, 7)


def test_net_current_additive(rng):
    t = np.arange(50.0)
    c = _contribs(rng)
    whole = net_current(t, c, 9).J
    parts = net_current(t, c, 9, range(0, 4)).J + net_current(t, c, 9, range(4, 9)).J
    np.testing.assert_allclose(whole, parts, rtol=0, atol=1e-15)


def test_net_current_empty_subset_is_zero(rng):
    t = np.arange(50.0)
    assert np.all(net_current(t, _contribs(rng), 9, subset=[]).J == 0.0)


def test_net_current_errors(rng):
    t = np.arange(50.0)
    c = _contribs(rng)
    with pytest.raises(UsageError):
        net_current(t, c, 9, subset=[12])
    c[2] = c[2][:-1]
    with pytest.raises(UsageError):
        net_current(t, c, 9)


def test_current_contribution_warns_on_imaginary_part():
    P = np.array([[0.0, 1.0], [1.0, 0.0]], complex)
    rho = np.array([[[1.0, 0.5j], [0.5j, 0.0]]])  # anti-Hermitian coherence: Tr[rho P] = i
    with pytest.warns(NumericsWarning):
        current_contribution(rho, P, np.zeros(1))


def test_current_contribution_value():
    P = np.array([[0.2, 0.3], [0.3, -0.1]], complex)
    rho = np.array([[[0.75, 0.1], [0.1, 0.25]]], complex)
    j = current_contribution(rho, P, np.array([0.5]))
    # Tr[rho P] = 0.75*0.2 + 0.25*(-0.1) + 2*0.1*0.3 = 0.185, minus A Tr rho = 0.5
    assert j[0] == pytest.approx(0.185 - 0.5, abs=1e-15)
