from __future__ import annotations

import numpy as np
import pytest

from chanest.estimators import (
    CorrelationSet,
    analytic_correlations,
    bilinear_to_slot,
    frequency_correlation,
    ls_estimate,
    ls_slot_estimate,
    mmse_estimate,
    mmse_slot_estimate,
    mse,
)
from chanest.fading import freq_response, generate_realization
from chanest.link import (
    ALT_PATTERN,
    DEFAULT_FRAME,
    DEFAULT_PATTERN,
    build_slot,
    extract_pilots,
    transmit_receive_fd,
)
from chanest.profiles import ChannelSpec, PowerDelayProfile, builtin_profile

TIMES = DEFAULT_FRAME.symbol_times_s()


def _received(pdp, seed, snr_db, doppler=97.0, pattern=DEFAULT_PATTERN):
    spec = ChannelSpec(pdp, max_doppler_hz=doppler)
    real = generate_realization(spec, [seed, 0], TIMES)
    h = freq_response(real, DEFAULT_FRAME)
    x = build_slot(pattern, DEFAULT_FRAME, seed=[seed, 1])
    y = transmit_receive_fd(x, h, snr_db, seed=[seed, 2])
    return y, h


class TestLsEstimate:
    def test_noiseless_recovery_at_pilots(self):
        y, h = _received(builtin_profile("epa"), 0, np.inf)
        ls = ls_estimate(extract_pilots(y, DEFAULT_PATTERN), DEFAULT_PATTERN)
        np.testing.assert_allclose(
            ls.values, extract_pilots(h, DEFAULT_PATTERN), atol=1e-12
        )

    def test_divides_by_pilot_value(self):
        y_pilot = np.full((36, 2), 2 + 2j)
        ls = ls_estimate(y_pilot, DEFAULT_PATTERN)
        np.testing.assert_allclose(ls.values, np.full((36, 2), 2.0))


class TestFrequencyCorrelation:
    def test_zero_delay_tap_gives_constant(self):
        pdp = PowerDelayProfile((0.0,), (0.0,))
        r = frequency_correlation(pdp, DEFAULT_FRAME, np.arange(4), np.arange(4))
        np.testing.assert_allclose(r, np.ones((4, 4)))

    def test_closed_form_two_taps(self):
        tau = 1e-6
        pdp = PowerDelayProfile((0.0, tau * 1e9), (0.0, 0.0))
        k = np.arange(6)
        r = frequency_correlation(pdp, DEFAULT_FRAME, k, k)
        dk = np.subtract.outer(k, k).astype(float)
        expect = 1.0 + np.exp(-2j * np.pi * 15_000.0 * dk * tau)
        np.testing.assert_allclose(r, expect, atol=1e-12)

    def test_hermitian(self):
        pdp = builtin_profile("etu")
        k = np.arange(72)
        r = frequency_correlation(pdp, DEFAULT_FRAME, k, k)
        np.testing.assert_allclose(r, r.conj().T, atol=1e-12)

    def test_diagonal_is_total_power(self):
        pdp = builtin_profile("designed")
        k = np.arange(72)
        r = frequency_correlation(pdp, DEFAULT_FRAME, k, k)
        np.testing.assert_allclose(np.diag(r).real, pdp.total_linear_power(), rtol=1e-12)

    def test_empirical_agreement(self):
        # MC check of the closed form on a two-tap profile
        pdp = PowerDelayProfile((0.0, 2000.0), (0.0, -3.0))
        spec = ChannelSpec(pdp)
        k = np.arange(12)
        acc = np.zeros((12, 12), dtype=complex)
        n = 3000
        from chanest.fading import response_from_taps

        for i in range(n):
            real = generate_realization(spec, [21, i], (0.0,))
            h = response_from_taps(real.tap_gains, pdp.delays_s(), DEFAULT_FRAME)[:12, 0]
            acc += np.outer(h, h.conj())
        analytic = frequency_correlation(pdp, DEFAULT_FRAME, k, k)
        err = np.linalg.norm(acc / n - analytic) / np.linalg.norm(analytic)
        assert err < 0.08


class TestAnalyticCorrelations:
    def test_shapes(self):
        corr = analytic_correlations(builtin_profile("epa"), DEFAULT_PATTERN, DEFAULT_FRAME)
        assert corr.r_hhp.shape == (72, 36)
        assert corr.r_hphp.shape == (36, 36)

    def test_pilot_rows_consistent(self):
        corr = analytic_correlations(builtin_profile("eva"), DEFAULT_PATTERN, DEFAULT_FRAME)
        pilot_sc = DEFAULT_PATTERN.pilot_subcarriers(DEFAULT_FRAME)
        np.testing.assert_array_equal(corr.r_hphp, corr.r_hhp[pilot_sc, :])

    def test_alt_pattern_offset(self):
        corr = analytic_correlations(builtin_profile("epa"), ALT_PATTERN, DEFAULT_FRAME)
        pdp = builtin_profile("epa")
        expect = frequency_correlation(
            pdp, DEFAULT_FRAME, np.arange(72), np.arange(1, 72, 2)
        )
        np.testing.assert_array_equal(corr.r_hhp, expect)


class TestMmseEstimate:
    def test_matches_direct_linear_algebra(self):
        pdp = builtin_profile("epa")
        corr = analytic_correlations(pdp, DEFAULT_PATTERN, DEFAULT_FRAME)
        y, _ = _received(pdp, 3, 10.0)
        ls = ls_estimate(extract_pilots(y, DEFAULT_PATTERN), DEFAULT_PATTERN)
        got = mmse_estimate(ls, corr, 10.0)
        ratio = 10.0 ** (-10.0 / 10.0)
        expect = corr.r_hhp @ np.linalg.solve(
            corr.r_hphp + ratio * np.eye(36), ls.values
        )
        np.testing.assert_allclose(got, expect, atol=1e-10)
        assert got.shape == (72, 2)

    def test_beats_ls_at_low_snr(self):
        pdp = builtin_profile("epa")
        corr = analytic_correlations(pdp, DEFAULT_PATTERN, DEFAULT_FRAME)
        errs_ls, errs_mmse = [], []
        for i in range(50):
            y, h = _received(pdp, 100 + i, 0.0)
            h_pilot_syms = h[:, list(DEFAULT_PATTERN.pilot_symbols)]
            ls = ls_estimate(extract_pilots(y, DEFAULT_PATTERN), DEFAULT_PATTERN)
            est = mmse_estimate(ls, corr, 0.0)
            errs_mmse.append(mse(est, h_pilot_syms))
            full_ls = bilinear_to_slot(ls.values, DEFAULT_PATTERN, DEFAULT_FRAME)
            errs_ls.append(mse(full_ls[:, list(DEFAULT_PATTERN.pilot_symbols)], h_pilot_syms))
        assert np.mean(errs_mmse) < 0.5 * np.mean(errs_ls)

    def test_minus_inf_snr_returns_zero(self):
        corr = analytic_correlations(builtin_profile("epa"), DEFAULT_PATTERN, DEFAULT_FRAME)
        ls = ls_estimate(np.ones((36, 2), dtype=complex), DEFAULT_PATTERN)
        got = mmse_estimate(ls, corr, -np.inf)
        np.testing.assert_array_equal(got, np.zeros((72, 2)))

    def test_rejects_nan_snr(self):
        corr = analytic_correlations(builtin_profile("epa"), DEFAULT_PATTERN, DEFAULT_FRAME)
        ls = ls_estimate(np.ones((36, 2), dtype=complex), DEFAULT_PATTERN)
        with pytest.raises(ValueError):
            mmse_estimate(ls, corr, float("nan"))

    def test_rank_deficient_corr_survives_infinite_snr(self):
        # flat channel: rank-1 pilot correlation, zero regularization from SNR
        corr = analytic_correlations(builtin_profile("flat"), DEFAULT_PATTERN, DEFAULT_FRAME)
        h_flat = 0.4 - 1.1j
        ls = ls_estimate(
            h_flat * DEFAULT_PATTERN.pilot_value * np.ones((36, 2)), DEFAULT_PATTERN
        )
        got = mmse_estimate(ls, corr, np.inf)
        assert got.shape == (72, 2)
        assert np.all(np.isfinite(got))
        # a truly flat noiseless channel should be reproduced across the band
        np.testing.assert_allclose(got, h_flat * np.ones((72, 2)), atol=1e-6)


class TestBilinearToSlot:
    def test_constant_field_is_preserved(self):
        vals = np.full((36, 2), 3 - 1j)
        out = bilinear_to_slot(vals, DEFAULT_PATTERN, DEFAULT_FRAME)
        assert out.shape == (72, 14)
        np.testing.assert_allclose(out, 3 - 1j, atol=1e-12)

    def test_pilot_positions_pass_through(self):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((36, 2)) + 1j * rng.standard_normal((36, 2))
        out = bilinear_to_slot(vals, DEFAULT_PATTERN, DEFAULT_FRAME)
        np.testing.assert_allclose(out[0::2][:, [2, 11]], vals, atol=1e-12)

    def test_frequency_midpoints_and_edge_hold(self):
        vals = np.zeros((36, 2), dtype=complex)
        vals[:, :] = np.arange(36)[:, None]  # value == pilot index, linear in k/2
        out = bilinear_to_slot(vals, DEFAULT_PATTERN, DEFAULT_FRAME)
        # odd subcarrier 2i+1 sits midway between pilots i and i+1
        np.testing.assert_allclose(out[1, 2], 0.5, atol=1e-12)
        np.testing.assert_allclose(out[69, 2], 34.5, atol=1e-12)
        # subcarrier 71 lies beyond pilot 70: constant extrapolation
        np.testing.assert_allclose(out[71, 2], 35.0, atol=1e-12)

    def test_time_interpolation_and_hold(self):
        vals = np.zeros((36, 2), dtype=complex)
        vals[:, 0] = 0.0
        vals[:, 1] = 9.0  # pilots at symbols 2 and 11: slope 1 per symbol
        out = bilinear_to_slot(vals, DEFAULT_PATTERN, DEFAULT_FRAME)
        np.testing.assert_allclose(out[0, :3], [0.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(out[0, 3:12], np.arange(1.0, 10.0), atol=1e-12)
        np.testing.assert_allclose(out[0, 12:], [9.0, 9.0], atol=1e-12)

    def test_full_band_rows_skip_frequency_interp(self):
        vals = np.arange(72 * 2, dtype=float).reshape(72, 2)
        out = bilinear_to_slot(vals, DEFAULT_PATTERN, DEFAULT_FRAME)
        np.testing.assert_allclose(out[:, 2], vals[:, 0], atol=1e-12)
        np.testing.assert_allclose(out[:, 11], vals[:, 1], atol=1e-12)

    def test_single_pilot_symbol_holds_in_time(self):
        pattern = ALT_PATTERN.__class__(pilot_symbols=(5,), comb_offset=0)
        vals = np.ones((36, 1), dtype=complex) * 2j
        out = bilinear_to_slot(vals, pattern, DEFAULT_FRAME)
        np.testing.assert_allclose(out, 2j, atol=1e-12)

    def test_rejects_wrong_shapes(self):
        with pytest.raises(ValueError):
            bilinear_to_slot(np.ones((36, 3)), DEFAULT_PATTERN, DEFAULT_FRAME)
        with pytest.raises(ValueError):
            bilinear_to_slot(np.ones((40, 2)), DEFAULT_PATTERN, DEFAULT_FRAME)


class TestSlotEstimators:
    def test_ls_slot_exact_on_static_flat_channel(self):
        y, h = _received(builtin_profile("flat"), 4, np.inf, doppler=0.0)
        est = ls_slot_estimate(y, DEFAULT_PATTERN, DEFAULT_FRAME)
        np.testing.assert_allclose(est, h, atol=1e-12)

    def test_mmse_slot_exact_on_static_flat_channel(self):
        pdp = builtin_profile("flat")
        corr = analytic_correlations(pdp, DEFAULT_PATTERN, DEFAULT_FRAME)
        y, h = _received(pdp, 5, np.inf, doppler=0.0)
        est = mmse_slot_estimate(y, DEFAULT_PATTERN, DEFAULT_FRAME, corr, np.inf)
        np.testing.assert_allclose(est, h, atol=1e-6)

    def test_mmse_slot_beats_ls_slot_on_selective_channel(self):
        pdp = builtin_profile("etu")
        corr = analytic_correlations(pdp, DEFAULT_PATTERN, DEFAULT_FRAME)
        tot_ls = tot_mmse = 0.0
        for i in range(40):
            y, h = _received(pdp, 200 + i, 5.0)
            tot_ls += mse(ls_slot_estimate(y, DEFAULT_PATTERN, DEFAULT_FRAME), h)
            tot_mmse += mse(
                mmse_slot_estimate(y, DEFAULT_PATTERN, DEFAULT_FRAME, corr, 5.0), h
            )
        assert tot_mmse < tot_ls

    def test_alt_pattern_round_trip(self):
        y, h = _received(builtin_profile("flat"), 6, np.inf, doppler=0.0, pattern=ALT_PATTERN)
        est = ls_slot_estimate(y, ALT_PATTERN, DEFAULT_FRAME)
        np.testing.assert_allclose(est, h, atol=1e-12)


class TestMse:
    def test_known_value(self):
        a = np.array([[1 + 1j, 0]])
        b = np.array([[0 + 0j, 0]])
        assert mse(a, b) == pytest.approx(1.0)

    def test_zero_for_identical(self):
        a = np.ones((3, 4), dtype=complex)
        assert mse(a, a) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.ones((2, 2)), np.ones((2, 3)))
