import math

import numpy as np
import pytest

from mmwavelink import (ChannelConfig, ChannelEstimate, Modulation, OfdmConfig,
                        PhaseNoiseConfig, PhaseNoiseModel, apply_channel,
                        build_frame, build_plan, decode_frame, equalize,
                        estimate_channel_ls, training_bins)

CLEAN_PN = PhaseNoiseConfig(sigma=0.0, model=PhaseNoiseModel.NONE)


def default_cfg():
    return OfdmConfig(plan=build_plan(64, 3, 26), cp_len=16, sample_rate_hz=25.0e6)


def signed_to_fft(plan):
    signed = np.arange(-plan.used_band, plan.used_band + 1)
    return signed, np.mod(signed, plan.n_fft)


def test_ls_identity_channel():
    cfg = default_cfg()
    t = training_bins(cfg)
    est = estimate_channel_ls(np.stack([t, t]), t, cfg.plan)
    assert est.h_freq.shape == (53,)
    np.testing.assert_allclose(est.h_freq, np.ones(53), atol=1e-12)
    assert est.noise_floor_est == 0.0


def test_ls_recovers_frequency_response():
    cfg = default_cfg()
    plan = cfg.plan
    t = training_bins(cfg)
    signed, fft_idx = signed_to_fft(plan)
    # Smooth two-tap response sampled on the used band.
    h = 0.9 + 0.3 * np.exp(-2j * np.pi * signed / plan.n_fft)
    rx = np.zeros((2, plan.n_fft), dtype=complex)
    rx[:, fft_idx] = t[fft_idx] * h
    est = estimate_channel_ls(rx, t, plan)
    known = np.abs(t[fft_idx]) > 0
    np.testing.assert_allclose(est.h_freq[known], h[known], atol=1e-12)
    # Guard bins carry no training; they are interpolated, not exact.
    assert np.all(np.isfinite(est.h_freq))
    assert np.max(np.abs(est.h_freq[~known] - h[~known])) < 0.05


def test_ls_noise_floor_from_repeat_spread():
    cfg = default_cfg()
    plan = cfg.plan
    t = training_bins(cfg)
    signed, fft_idx = signed_to_fft(plan)
    known = np.abs(t[fft_idx]) > 0
    rx = np.stack([t, t]).astype(complex)
    delta = 0.02 + 0.01j
    bump = fft_idx[known][5]
    rx[1, bump] += delta
    est = estimate_channel_ls(rx, t, plan)
    expect = (np.abs(delta / t[bump]) ** 2) / (2.0 * known.sum())
    assert est.noise_floor_est == pytest.approx(expect, rel=1e-9)


def test_ls_input_validation():
    cfg = default_cfg()
    t = training_bins(cfg)
    with pytest.raises(ValueError):
        estimate_channel_ls(np.stack([t, t, t]), t, cfg.plan)
    with pytest.raises(ValueError):
        estimate_channel_ls(np.stack([t, t]), t[:32], cfg.plan)
    bad = t.copy()
    bad[cfg.plan.payload_indices[0]] = 0.0
    with pytest.raises(ValueError):
        estimate_channel_ls(np.stack([bad, bad]), bad, cfg.plan)


def test_equalize_divides_and_erases():
    cfg = default_cfg()
    plan = cfg.plan
    h = np.full(53, 2.0, dtype=complex)
    h[0] = 0.0  # signed subcarrier -26, payload position 0
    est = ChannelEstimate(h_freq=h, noise_floor_est=0.0, plan=plan)
    bins = np.zeros(plan.n_fft, dtype=complex)
    bins[list(plan.payload_indices)] = 2.0 * (1.0 + 1.0j)
    z, erased = equalize(bins, est)
    assert erased[0] and erased.sum() == 1
    assert z[0] == 0.0
    np.testing.assert_allclose(z[1:], 1.0 + 1.0j, atol=1e-12)
    with pytest.raises(ValueError):
        equalize(bins[:-1], est)


@pytest.mark.parametrize("pnc_enabled", [True, False])
@pytest.mark.parametrize("mod", list(Modulation))
def test_decode_clean_frame_is_exact(mod, pnc_enabled):
    cfg = default_cfg()
    rng = np.random.default_rng(10)
    bits = rng.integers(0, 2, 46 * mod.bits_per_symbol * 4, dtype=np.uint8)
    frame = build_frame(bits, mod, cfg, 4)
    report = decode_frame(frame.samples(), cfg, mod, pnc_enabled=pnc_enabled)
    np.testing.assert_array_equal(report.bits, bits)
    assert report.evm_db == -120.0
    assert report.n_erased == 0


def test_decode_multipath_noiseless_is_exact():
    cfg = default_cfg()
    rng = np.random.default_rng(11)
    taps = tuple(rng.normal(size=4) + 1j * rng.normal(size=4))
    channel = ChannelConfig(taps=taps, snr_db=math.inf, phase_noise=CLEAN_PN, seed=1)
    bits = rng.integers(0, 2, 92 * 4, dtype=np.uint8)
    frame = build_frame(bits, Modulation.QPSK, cfg, 4)
    y, _ = apply_channel(frame.samples(), channel)
    report = decode_frame(y, cfg, Modulation.QPSK, pnc_enabled=False,
                          true_bits=bits)
    np.testing.assert_array_equal(report.bits, bits)
    assert report.evm_db <= -40.0
    assert report.evm_db_genie <= -40.0


def test_decode_constant_rotation_absorbed_by_ls():
    cfg = default_cfg()
    rng = np.random.default_rng(12)
    bits = rng.integers(0, 2, 92 * 3, dtype=np.uint8)
    frame = build_frame(bits, Modulation.QPSK, cfg, 3)
    y = frame.samples() * np.exp(1j * 0.7)
    report = decode_frame(y, cfg, Modulation.QPSK, pnc_enabled=False)
    np.testing.assert_array_equal(report.bits, bits)
    assert report.evm_db == -120.0
    assert report.residual_phase_std < 1e-9


def test_frame_evm_is_rms_of_per_symbol_evm():
    cfg = default_cfg()
    rng = np.random.default_rng(13)
    bits = rng.integers(0, 2, 92 * 6, dtype=np.uint8)
    frame = build_frame(bits, Modulation.QPSK, cfg, 6)
    channel = ChannelConfig(taps=(1.0,), snr_db=25.0, phase_noise=CLEAN_PN, seed=2)
    y, _ = apply_channel(frame.samples(), channel)
    report = decode_frame(y, cfg, Modulation.QPSK, pnc_enabled=False)
    assert report.n_erased == 0
    combined = 10.0 * np.log10(np.mean(10.0 ** (np.asarray(report.per_symbol_evm) / 10.0)))
    assert abs(report.evm_db - combined) < 1e-9
    # The linear-domain sums must reproduce the reported dB value.
    assert report.evm_db == pytest.approx(
        10.0 * np.log10(report.error_power / report.reference_power), abs=1e-9)


def test_decode_genie_evm_tracks_true_bits():
    cfg = default_cfg()
    rng = np.random.default_rng(14)
    bits = rng.integers(0, 2, 92 * 2, dtype=np.uint8)
    frame = build_frame(bits, Modulation.QPSK, cfg, 2)
    report = decode_frame(frame.samples(), cfg, Modulation.QPSK, true_bits=bits)
    assert report.evm_db_genie == -120.0
    assert decode_frame(frame.samples(), cfg, Modulation.QPSK).evm_db_genie is None


def test_decode_frame_validation():
    cfg = default_cfg()
    with pytest.raises(ValueError):
        decode_frame(np.zeros(81, dtype=complex), cfg, Modulation.QPSK)
    with pytest.raises(ValueError):
        decode_frame(np.zeros(80, dtype=complex), cfg, Modulation.QPSK)
    with pytest.raises(ValueError):
        decode_frame(np.zeros((2, 80), dtype=complex), cfg, Modulation.QPSK)
