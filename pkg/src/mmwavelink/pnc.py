"""Pilot and guard-band phase noise estimation and cancellation.

Oscillator phase noise multiplies the time-domain signal, so its spectrum
convolves every subcarrier. Because the payload stays clear of the pilot's
guard band, the bins around DC carry the pilot smeared by the low-frequency
phase process and nothing else: keeping those bins and transforming back
recovers the phase trajectory itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ofdm import OfdmConfig

DEGENERATE_EPS = 1e-9


@dataclass
class PhaseEstimate:
    """Per-sample phase in (-pi, pi] plus the raw band-limited estimate."""

    per_sample_phase: np.ndarray
    raw_complex: np.ndarray
    degenerate_samples: int


def estimate_phase(body, cfg: OfdmConfig) -> PhaseEstimate:
    """Estimate exp(j theta(n)) over one CP-stripped symbol body.

    FFT -> keep the pilot bin and the +-k_guard bins around it -> IFFT. Samples
    whose magnitude falls below DEGENERATE_EPS hold the previous phase (0 for a
    degenerate start) and are counted.
    """
    body = np.asarray(body, dtype=complex)
    plan = cfg.plan
    n = plan.n_fft
    if body.shape != (n,):
        raise ValueError(f"expected a {n}-sample body, got shape {body.shape}")
    bins = np.fft.fft(body, norm="ortho")
    keep = np.zeros(n, dtype=bool)
    keep[plan.pilot_index] = True
    keep[list(plan.guard_indices)] = True
    bins[~keep] = 0.0
    raw = np.fft.ifft(bins, norm="ortho")

    degenerate = np.abs(raw) < DEGENERATE_EPS
    phase = np.angle(raw)
    phase[phase == -np.pi] = np.pi
    if degenerate.any():
        last_valid = np.where(~degenerate, np.arange(n), -1)
        np.maximum.accumulate(last_valid, out=last_valid)
        phase = np.where(last_valid >= 0, phase[np.maximum(last_valid, 0)], 0.0)
    return PhaseEstimate(
        per_sample_phase=phase,
        raw_complex=raw,
        degenerate_samples=int(degenerate.sum()),
    )


def cancel(samples, estimate: PhaseEstimate) -> np.ndarray:
    """Counter-rotate samples by the estimated phase; magnitudes are kept."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != estimate.per_sample_phase.shape:
        raise ValueError("samples and estimate lengths differ")
    return samples * np.exp(-1j * estimate.per_sample_phase)


def pnc_symbol(samples, cfg: OfdmConfig) -> np.ndarray:
    """Strip the CP, estimate the phase from pilot+guard bins, counter-rotate.

    Returns the cleaned n_fft-sample body, ready for the demodulation FFT.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (cfg.symbol_len,):
        raise ValueError(f"expected {cfg.symbol_len} samples, got shape {samples.shape}")
    body = samples[cfg.cp_len:]
    return cancel(body, estimate_phase(body, cfg))
