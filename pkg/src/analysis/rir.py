"""Synthetic room impulse responses and noise for test scenes."""
from dataclasses import dataclass
from typing import Tuple
import logging
import math

import numpy as np
import scipy.signal

from ..audio.signal_io import Signal
from ..core.exceptions import InvalidSpecError, LengthMismatchError, SampleRateMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RirSpec:
    t60: float
    drr_db: float
    length: int
    seed: int = 0
    sample_rate: int = 16000

    def __post_init__(self):
        if not (self.t60 > 0 and math.isfinite(self.t60)):
            raise InvalidSpecError(f"t60 must be positive, got {self.t60}")
        if not math.isfinite(self.drr_db):
            raise InvalidSpecError(f"drr_db must be finite, got {self.drr_db}")
        if self.length < 2:
            raise InvalidSpecError(f"RIR length must be at least 2 samples, got {self.length}")
        if self.sample_rate <= 0:
            raise InvalidSpecError(f"sample_rate must be positive, got {self.sample_rate}")

    @classmethod
    def for_room(cls, t60: float, drr_db: float, sample_rate: int = 16000, seed: int = 0) -> "RirSpec":
        """Spec long enough to cover the full 60 dB decay"""
        return cls(t60=t60, drr_db=drr_db, length=max(2, int(math.ceil(t60 * sample_rate))),
                   seed=seed, sample_rate=sample_rate)


def decay_envelope(n: np.ndarray, sample_rate: int, t60: float) -> np.ndarray:
    """Amplitude envelope exp(-3 ln(10) n / (fs t60)), 60 dB down at n = fs t60"""
    return np.exp(-3.0 * np.log(10.0) * np.asarray(n, dtype=np.float64) / (sample_rate * t60))


def direct_to_reverberant_db(rir: np.ndarray) -> float:
    rir = np.asarray(rir, dtype=np.float64)
    tail = float(np.sum(rir[1:] ** 2))
    return 10.0 * np.log10(rir[0] ** 2 / tail)


def synthesize_rir(spec: RirSpec) -> Signal:
    """Unit direct path at sample 0 followed by an exponentially decaying Gaussian tail.

    The tail is scaled so the direct-to-tail energy ratio equals ``drr_db``.
    """
    rng = np.random.default_rng(spec.seed)
    n = np.arange(1, spec.length)
    tail = rng.standard_normal(spec.length - 1) * decay_envelope(n, spec.sample_rate, spec.t60)
    tail_energy = float(np.sum(tail ** 2))
    if tail_energy <= 0:
        raise InvalidSpecError("Reverberant tail has no energy")
    tail *= np.sqrt(10.0 ** (-spec.drr_db / 10.0) / tail_energy)

    rir = np.concatenate(([1.0], tail))
    logger.debug(f"Synthesized RIR: t60={spec.t60}s, DRR={spec.drr_db} dB, {spec.length} samples")
    return Signal(rir, spec.sample_rate)


def estimate_decay_slope(rir: Signal, block: int = 256) -> float:
    """Energy decay slope of the tail in dB/s from a linear fit of block energies"""
    tail = rir.samples[1:]
    n_blocks = tail.size // block
    if n_blocks < 2:
        raise InvalidSpecError(f"Need at least two blocks of {block} samples to fit a decay")
    energies = np.sum(tail[:n_blocks * block].reshape(n_blocks, block) ** 2, axis=1)
    keep = energies > 0
    times = (np.arange(n_blocks) + 0.5) * block / rir.sample_rate_hz
    slope, _ = np.polyfit(times[keep], 10.0 * np.log10(energies[keep]), 1)
    return float(slope)


def speech_shaped_noise(reference: Signal, n_samples: int, seed: int = 0, nperseg: int = 512) -> Signal:
    """Gaussian noise coloured by the long-term average spectrum of ``reference``"""
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    nperseg = min(nperseg, len(reference))
    freqs, psd = scipy.signal.welch(reference.samples, fs=reference.sample_rate_hz, nperseg=nperseg)
    rng = np.random.default_rng(seed)
    white = np.fft.rfft(rng.standard_normal(n_samples))
    target = np.fft.rfftfreq(n_samples, d=1.0 / reference.sample_rate_hz)
    shaping = np.sqrt(np.interp(target, freqs, psd))
    noise = np.fft.irfft(white * shaping, n=n_samples)
    rms = np.sqrt(np.mean(noise ** 2))
    if rms > 0:
        noise = noise / rms
    return Signal(noise, reference.sample_rate_hz)


def signal_power(signal: Signal) -> float:
    return float(np.mean(signal.samples ** 2))


def mix_at_snr(signal: Signal, noise: Signal, snr_db: float) -> Tuple[Signal, Signal]:
    """Add noise scaled to the requested SNR; returns (mixture, scaled noise)"""
    if signal.sample_rate_hz != noise.sample_rate_hz:
        raise SampleRateMismatchError(
            f"Signal at {signal.sample_rate_hz} Hz, noise at {noise.sample_rate_hz} Hz"
        )
    if len(noise) < len(signal):
        raise LengthMismatchError(f"Noise has {len(noise)} samples, signal needs {len(signal)}")
    noise = noise.trimmed(len(signal))
    noise_power = signal_power(noise)
    if noise_power <= 0:
        raise ValueError("Noise has zero power")
    gain = np.sqrt(signal_power(signal) / (noise_power * 10.0 ** (snr_db / 10.0)))
    scaled = noise.scaled(gain)
    return Signal(signal.samples + scaled.samples, signal.sample_rate_hz), scaled


def measured_snr_db(signal: Signal, noise: Signal) -> float:
    return 10.0 * np.log10(signal_power(signal) / signal_power(noise))
