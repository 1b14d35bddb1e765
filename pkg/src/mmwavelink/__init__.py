"""OFDM link simulator with pilot-aided oscillator phase noise cancellation."""

from .modulation import EVM_FLOOR_DB, Modulation, demap_hard, evm_db, map_bits
from .ofdm import (Frame, OfdmConfig, SubcarrierPlan, build_frame, build_plan,
                   demodulate_symbol, frame_capacity_bits, modulate_symbol, pad_bits,
                   training_bins)
from .channel import (ChannelConfig, PhaseNoiseConfig, PhaseNoiseModel,
                      PhaseNoiseProcess, apply_channel, single_tone_probe)
from .pnc import PhaseEstimate, cancel, estimate_phase, pnc_symbol
from .receiver import (ChannelEstimate, DecodeReport, decode_frame, equalize,
                       estimate_channel_ls)
from .link import (FrameResult, aggregate_evm_db, derived_seed,
                   evm_db_from_powers, frame_bits_rng, frame_channel_cfg,
                   run_frame)
from .metrics import (GaussianFit, PhaseTrackingReport, PsdEstimate,
                      band_power_fraction, extract_tone_phase, gaussian_fit,
                      phase_pdf, phase_tracking_report, psd_welch, wrap_phase)
from .linklayer import (Packet, PacketStatus, StreamReport, depacketize,
                        make_packet, packetize, stream_bytes, verify_packet)

__version__ = "0.1.0"

__all__ = [
    "EVM_FLOOR_DB", "Modulation", "map_bits", "demap_hard", "evm_db",
    "SubcarrierPlan", "OfdmConfig", "Frame", "build_plan", "modulate_symbol",
    "demodulate_symbol", "build_frame", "frame_capacity_bits", "pad_bits",
    "training_bins",
    "PhaseNoiseModel", "PhaseNoiseConfig", "PhaseNoiseProcess", "ChannelConfig",
    "apply_channel", "single_tone_probe",
    "PhaseEstimate", "estimate_phase", "cancel", "pnc_symbol",
    "ChannelEstimate", "DecodeReport", "estimate_channel_ls", "equalize",
    "decode_frame",
    "FrameResult", "run_frame", "frame_channel_cfg", "frame_bits_rng",
    "derived_seed", "aggregate_evm_db", "evm_db_from_powers",
    "GaussianFit", "PsdEstimate", "PhaseTrackingReport", "extract_tone_phase",
    "gaussian_fit", "psd_welch", "band_power_fraction", "phase_pdf",
    "phase_tracking_report", "wrap_phase",
    "Packet", "PacketStatus", "StreamReport", "packetize", "depacketize",
    "make_packet", "verify_packet", "stream_bytes",
]
