"""OFDM subcarrier planning, unitary symbol transforms, and framing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modulation import Modulation, map_bits

N_PREAMBLE_SYMBOLS = 2

# Fixed seed for the pseudo-random preamble training tones; both ends derive
# the identical sequence from the plan alone.
_TRAINING_SEED = 0x7261494E


@dataclass(frozen=True)
class SubcarrierPlan:
    """Frequency-domain bin assignment for one OFDM symbol.

    All indices are FFT bin numbers (0 = DC, negative subcarriers wrap to the
    top of the FFT). `payload_indices` is ordered by ascending signed
    subcarrier index, -used_band .. +used_band.
    """

    n_fft: int
    k_guard: int
    used_band: int
    pilot_index: int
    guard_indices: tuple[int, ...]
    payload_indices: tuple[int, ...]
    null_indices: tuple[int, ...]


def build_plan(n_fft: int, k_guard: int, used_band: int) -> SubcarrierPlan:
    """Lay out pilot, guard, payload, and null bins for an N-point symbol.

    The pilot occupies DC, `k_guard` bins on each side of it are reserved for
    phase tracking, payload fills the rest of the used band, and everything
    past +-used_band stays null.
    """
    if n_fft < 8 or n_fft & (n_fft - 1):
        raise ValueError(f"n_fft must be a power of two >= 8, got {n_fft}")
    if not 0 <= k_guard < used_band <= n_fft // 2 - 1:
        raise ValueError(
            f"need 0 <= k_guard < used_band <= n_fft/2 - 1, "
            f"got k_guard={k_guard}, used_band={used_band}, n_fft={n_fft}"
        )
    guard = [k % n_fft for k in range(-k_guard, k_guard + 1) if k != 0]
    payload = [
        k % n_fft
        for k in range(-used_band, used_band + 1)
        if abs(k) > k_guard
    ]
    assigned = {0} | set(guard) | set(payload)
    null = [k for k in range(n_fft) if k not in assigned]
    return SubcarrierPlan(
        n_fft=n_fft,
        k_guard=k_guard,
        used_band=used_band,
        pilot_index=0,
        guard_indices=tuple(guard),
        payload_indices=tuple(payload),
        null_indices=tuple(null),
    )


@dataclass(frozen=True)
class OfdmConfig:
    plan: SubcarrierPlan
    cp_len: int
    sample_rate_hz: float
    pilot_value: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not 0 <= self.cp_len < self.plan.n_fft:
            raise ValueError(f"cp_len must be in [0, n_fft), got {self.cp_len}")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.pilot_value == 0:
            raise ValueError("pilot_value must be nonzero")

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.sample_rate_hz / self.plan.n_fft

    @property
    def symbol_len(self) -> int:
        return self.plan.n_fft + self.cp_len


def modulate_symbol(freq_bins, cfg: OfdmConfig) -> np.ndarray:
    """Unitary IFFT of one symbol's bins plus cyclic prefix."""
    freq_bins = np.asarray(freq_bins, dtype=complex)
    n = cfg.plan.n_fft
    if freq_bins.shape != (n,):
        raise ValueError(f"expected {n} bins, got shape {freq_bins.shape}")
    body = np.fft.ifft(freq_bins, norm="ortho")
    return np.concatenate([body[n - cfg.cp_len:], body])


def demodulate_symbol(samples, cfg: OfdmConfig) -> np.ndarray:
    """Strip the cyclic prefix and return the unitary FFT of the body."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (cfg.symbol_len,):
        raise ValueError(f"expected {cfg.symbol_len} samples, got shape {samples.shape}")
    return np.fft.fft(samples[cfg.cp_len:], norm="ortho")


def training_bins(cfg: OfdmConfig) -> np.ndarray:
    """Known preamble spectrum: unit-magnitude pseudo-random tones on the
    payload bins, the pilot at its nominal value, guards and edges null."""
    plan = cfg.plan
    rng = np.random.default_rng(_TRAINING_SEED)
    phases = rng.uniform(0.0, 2.0 * np.pi, len(plan.payload_indices))
    bins = np.zeros(plan.n_fft, dtype=complex)
    bins[list(plan.payload_indices)] = np.exp(1j * phases)
    bins[plan.pilot_index] = cfg.pilot_value
    return bins


@dataclass
class Frame:
    """One PHY burst: repeated training symbols followed by payload symbols."""

    preamble_symbols: list
    payload_symbols: list
    payload_bits: np.ndarray
    modulation: Modulation

    def samples(self) -> np.ndarray:
        return np.concatenate(self.preamble_symbols + self.payload_symbols)


def frame_capacity_bits(cfg: OfdmConfig, modulation: Modulation, n_payload_symbols: int) -> int:
    return n_payload_symbols * len(cfg.plan.payload_indices) * modulation.bits_per_symbol


def pad_bits(bits, capacity: int) -> np.ndarray:
    """Zero-pad a bit array up to `capacity`; reject overflow."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size > capacity:
        raise ValueError(f"{bits.size} bits exceed frame capacity {capacity}")
    return np.concatenate([bits, np.zeros(capacity - bits.size, dtype=np.uint8)])


def build_frame(bits, modulation: Modulation, cfg: OfdmConfig, n_payload_symbols: int) -> Frame:
    """Assemble a frame: 2 identical training symbols, then payload symbols.

    `bits` are zero-padded to fill exactly `n_payload_symbols` symbols; the
    padded bits are recorded on the frame.
    """
    if n_payload_symbols < 0:
        raise ValueError("n_payload_symbols must be >= 0")
    plan = cfg.plan
    capacity = frame_capacity_bits(cfg, modulation, n_payload_symbols)
    padded = pad_bits(bits, capacity)
    symbols = map_bits(padded, modulation).reshape(n_payload_symbols, len(plan.payload_indices))

    preamble_time = modulate_symbol(training_bins(cfg), cfg)
    payload_time = []
    payload_idx = list(plan.payload_indices)
    for row in symbols:
        bins = np.zeros(plan.n_fft, dtype=complex)
        bins[payload_idx] = row
        bins[plan.pilot_index] = cfg.pilot_value
        payload_time.append(modulate_symbol(bins, cfg))

    return Frame(
        preamble_symbols=[preamble_time.copy() for _ in range(N_PREAMBLE_SYMBOLS)],
        payload_symbols=payload_time,
        payload_bits=padded,
        modulation=modulation,
    )
