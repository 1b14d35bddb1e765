"""Single-frame end-to-end pipeline shared by the CLI and the packet layer."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelConfig, apply_channel
from .modulation import EVM_FLOOR_DB, Modulation
from .ofdm import N_PREAMBLE_SYMBOLS, OfdmConfig, build_frame
from .pnc import estimate_phase
from .receiver import DecodeReport, decode_frame


def derived_seed(*parts: int) -> int:
    """Stable 64-bit seed derived from integer key parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


@dataclass
class FrameResult:
    report: DecodeReport
    tx_bits: np.ndarray
    n_channel_uses: int
    theta_true: np.ndarray      # ground truth over the whole frame buffer
    theta_est: np.ndarray       # estimator output over payload symbol bodies
    theta_true_bodies: np.ndarray  # ground truth aligned with theta_est


def run_frame(bits, modulation: Modulation, ofdm_cfg: OfdmConfig,
              channel_cfg: ChannelConfig, pnc_enabled: bool,
              n_payload_symbols: int) -> FrameResult:
    """Transmit one frame of bits through the channel and decode it."""
    frame = build_frame(bits, modulation, ofdm_cfg, n_payload_symbols)
    tx = frame.samples()
    y, theta = apply_channel(tx, channel_cfg)
    report = decode_frame(y, ofdm_cfg, modulation, pnc_enabled,
                          true_bits=frame.payload_bits)

    sym_len = ofdm_cfg.symbol_len
    est_list = []
    true_list = []
    for s in range(N_PREAMBLE_SYMBOLS, N_PREAMBLE_SYMBOLS + n_payload_symbols):
        start = s * sym_len + ofdm_cfg.cp_len
        body = y[start:start + ofdm_cfg.plan.n_fft]
        est_list.append(estimate_phase(body, ofdm_cfg).per_sample_phase)
        true_list.append(theta[start:start + ofdm_cfg.plan.n_fft])
    empty = np.zeros(0)
    return FrameResult(
        report=report,
        tx_bits=frame.payload_bits,
        n_channel_uses=tx.size,
        theta_true=theta,
        theta_est=np.concatenate(est_list) if est_list else empty,
        theta_true_bodies=np.concatenate(true_list) if true_list else empty,
    )


def frame_channel_cfg(channel_cfg: ChannelConfig, run_seed: int, frame_idx: int) -> ChannelConfig:
    """Per-frame channel config with an independent derived seed."""
    return replace(channel_cfg, seed=derived_seed(run_seed, frame_idx, 0))


def frame_bits_rng(run_seed: int, frame_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([run_seed, frame_idx, 1]))


def evm_db_from_powers(error_power: float, reference_power: float) -> float | None:
    """EVM in dB from accumulated error and reference powers."""
    if reference_power <= 0.0:
        return None
    if error_power <= 0.0:
        return EVM_FLOOR_DB
    return max(10.0 * float(np.log10(error_power / reference_power)), EVM_FLOOR_DB)


def aggregate_evm_db(reports) -> float | None:
    """RMS (linear-domain) EVM over frames; None without any decided points."""
    return evm_db_from_powers(sum(r.error_power for r in reports),
                              sum(r.reference_power for r in reports))
