"""Measurement utilities: tone phase extraction, distribution fits, Welch PSD."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import signal


@dataclass(frozen=True)
class GaussianFit:
    mean: float
    std: float
    sample_count: int


@dataclass(frozen=True)
class PsdEstimate:
    freqs_hz: np.ndarray
    power_db: np.ndarray
    nfft: int
    segment_overlap: float


@dataclass(frozen=True)
class PhaseTrackingReport:
    rmse: float
    residual_std: float


def wrap_phase(x) -> np.ndarray:
    """Wrap angles to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    wrapped = np.mod(x + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def extract_tone_phase(y, tone_hz: float, sample_rate_hz: float) -> np.ndarray:
    """Phase trajectory of a received single tone.

    Mixes the tone down to DC, unwraps the angle, and removes the mean so a
    constant channel rotation does not bias the result.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("input must be a non-empty 1-D buffer")
    n = np.arange(y.size)
    baseband = y * np.exp(-2j * np.pi * tone_hz * n / sample_rate_hz)
    phase = np.unwrap(np.angle(baseband))
    return phase - phase.mean()


def gaussian_fit(samples) -> GaussianFit:
    """Method-of-moments Gaussian fit (unbiased std)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise ValueError("need at least 2 samples")
    return GaussianFit(
        mean=float(samples.mean()),
        std=float(samples.std(ddof=1)),
        sample_count=samples.size,
    )


def psd_welch(samples, sample_rate_hz: float, nfft: int = 4096,
              overlap: float = 0.5) -> PsdEstimate:
    """Two-sided Welch power spectral density, Hann window, density scaling.

    Frequencies are returned in ascending order spanning [-fs/2, fs/2); the
    integrated density matches the time-domain variance up to window and
    detrending effects.
    """
    samples = np.asarray(samples)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError("input must be a non-empty 1-D buffer")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    if nfft < 2 or nfft > samples.size:
        raise ValueError(f"nfft={nfft} must be in [2, len(samples)={samples.size}]")
    freqs, density = signal.welch(
        samples,
        fs=sample_rate_hz,
        window="hann",
        nperseg=nfft,
        noverlap=int(round(nfft * overlap)),
        detrend="constant",
        return_onesided=False,
        scaling="density",
    )
    order = np.argsort(freqs)
    power_db = 10.0 * np.log10(np.maximum(density[order], 1e-300))
    return PsdEstimate(
        freqs_hz=freqs[order],
        power_db=power_db,
        nfft=nfft,
        segment_overlap=overlap,
    )


def integrated_power(est: PsdEstimate) -> float:
    df = est.freqs_hz[1] - est.freqs_hz[0]
    return float(np.sum(10.0 ** (est.power_db / 10.0)) * df)


def band_power_fraction(est: PsdEstimate, band_hz: float) -> float:
    """Fraction of total PSD power at |f| <= band_hz."""
    linear = 10.0 ** (est.power_db / 10.0)
    in_band = np.abs(est.freqs_hz) <= band_hz
    return float(np.sum(linear[in_band]) / np.sum(linear))


def phase_pdf(samples, n_bins: int = 101):
    """Histogram density of phase samples; returns (bin_centers, density)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("input must be non-empty")
    density, edges = np.histogram(samples, bins=n_bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, density


def phase_tracking_report(theta_true, theta_est) -> PhaseTrackingReport:
    """Wrapped-error statistics between a true and an estimated phase track."""
    theta_true = np.asarray(theta_true, dtype=float).ravel()
    theta_est = np.asarray(theta_est, dtype=float).ravel()
    if theta_true.size == 0 or theta_true.size != theta_est.size:
        raise ValueError("trajectories must be non-empty and equal length")
    d = wrap_phase(theta_true - theta_est)
    return PhaseTrackingReport(
        rmse=float(np.sqrt(np.mean(d ** 2))),
        residual_std=float(d.std()),
    )


def write_series_csv(path, header, columns) -> None:
    """Write parallel 1-D columns as CSV with a header row."""
    columns = [np.asarray(c).ravel() for c in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.10g}"
    return v


def write_psd_csv(est: PsdEstimate, path) -> None:
    write_series_csv(path, ["freq_hz", "power_db"], [est.freqs_hz, est.power_db])


def write_phase_pdf_csv(centers, density, path) -> None:
    write_series_csv(path, ["bin_center", "density"], [centers, density])
