"""Square-root Hann STFT analysis and overlap-add synthesis.

Both windows are the square root of a periodic Hann window, so with a
hop of half a frame the analysis/synthesis product sums to one and unit
gains reconstruct the input wherever two frames overlap.
"""
from dataclasses import dataclass
from typing import Optional
import logging
import math

import numpy as np
import scipy.signal

from .signal_io import Signal
from ..core.exceptions import DimensionMismatchError, SignalTooShortError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StftConfig:
    frame_len: int = 1024
    hop: Optional[int] = None
    power_p: int = 1

    def __post_init__(self):
        if self.frame_len < 2 or self.frame_len % 2:
            raise ValueError(f"frame_len must be even and >= 2, got {self.frame_len}")
        if self.hop is None:
            object.__setattr__(self, "hop", self.frame_len // 2)
        if self.hop != self.frame_len // 2:
            raise ValueError(f"hop must be frame_len/2 ({self.frame_len // 2}), got {self.hop}")
        if self.power_p not in (1, 2):
            raise ValueError(f"power_p must be 1 or 2, got {self.power_p}")

    @property
    def n_bins(self) -> int:
        return self.frame_len // 2 + 1

    @classmethod
    def from_duration(cls, frame_ms: float, sample_rate: int, power_p: int = 1) -> "StftConfig":
        frame_len = int(round(frame_ms * sample_rate / 1000.0))
        return cls(frame_len=frame_len + (frame_len % 2), power_p=power_p)


@dataclass
class ComplexSpectrogram:
    """One-sided complex STFT, K x T"""

    coeffs: np.ndarray
    config: StftConfig
    original_len: int
    sample_rate_hz: int = 16000

    @property
    def shape(self):
        return self.coeffs.shape


@dataclass
class Spectrogram:
    """Non-negative K x T matrix of |STFT|^p values"""

    values: np.ndarray
    power_p: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionMismatchError(f"Spectrogram must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("Spectrogram entries must be finite and non-negative")

    @property
    def shape(self):
        return self.values.shape


def sqrt_hann(frame_len: int) -> np.ndarray:
    return np.sqrt(scipy.signal.get_window("hann", frame_len, fftbins=True))


def frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    """Number of frames once the tail is zero-padded to a full frame"""
    return int(math.ceil((n_samples - frame_len) / hop)) + 1


def stft_forward(signal: Signal, config: StftConfig) -> ComplexSpectrogram:
    n = len(signal)
    if n < config.frame_len:
        raise SignalTooShortError(
            f"Signal has {n} samples, at least one frame of {config.frame_len} is needed"
        )
    n_frames = frame_count(n, config.frame_len, config.hop)
    padded = np.zeros((n_frames - 1) * config.hop + config.frame_len)
    padded[:n] = signal.samples

    frames = np.lib.stride_tricks.sliding_window_view(padded, config.frame_len)[::config.hop]
    coeffs = np.fft.rfft(frames * sqrt_hann(config.frame_len), axis=1).T
    logger.debug(f"STFT: {n} samples -> {coeffs.shape[0]} bins x {coeffs.shape[1]} frames")
    return ComplexSpectrogram(np.ascontiguousarray(coeffs), config, n, signal.sample_rate_hz)


def magnitude(spec: ComplexSpectrogram) -> Spectrogram:
    p = spec.config.power_p
    values = np.abs(spec.coeffs)
    if p == 2:
        values = values * values
    return Spectrogram(values, p)


def spectral_energy(spec: ComplexSpectrogram) -> np.ndarray:
    """Per-frame energy of the windowed frames recovered from the one-sided spectrum"""
    n = spec.config.frame_len
    weights = np.full(spec.coeffs.shape[0], 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    return (weights[:, None] * np.abs(spec.coeffs) ** 2).sum(axis=0) / n


def apply_gain_and_synthesize(spec: ComplexSpectrogram, gain: np.ndarray, power_p: int) -> Signal:
    """Scale each coefficient by gain^(1/p), keep the reverberant phase and overlap-add"""
    gain = np.asarray(gain, dtype=np.float64)
    if gain.shape != spec.coeffs.shape:
        raise DimensionMismatchError(
            f"Gain shape {gain.shape} does not match spectrogram shape {spec.coeffs.shape}"
        )
    if not np.all(np.isfinite(gain)) or np.any(gain < 0):
        raise ValueError("Gain entries must be finite and non-negative")

    scale = gain if power_p == 1 else np.sqrt(gain)
    cfg = spec.config
    frames = np.fft.irfft(spec.coeffs * scale, n=cfg.frame_len, axis=0) * sqrt_hann(cfg.frame_len)[:, None]

    n_frames = frames.shape[1]
    out = np.zeros((n_frames - 1) * cfg.hop + cfg.frame_len)
    for t in range(n_frames):
        start = t * cfg.hop
        out[start:start + cfg.frame_len] += frames[:, t]
    return Signal(out[:spec.original_len], spec.sample_rate_hz)
