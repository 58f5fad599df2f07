"""Desk-scale quality measures.

PESQ and reverberation decay tail measures are not provided. The
cepstral distance here is an FFT-cepstrum surrogate; its absolute values
are not comparable to LPC-cepstrum figures.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict
import logging

import numpy as np
import scipy.signal

from ..audio.signal_io import Signal
from ..audio.stft import Spectrogram
from ..core.exceptions import DimensionMismatchError, LengthMismatchError, SampleRateMismatchError
from ..core.nctf import kl_divergence

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-12
CD_SCALE = 10.0 / np.log(10.0)


@dataclass
class MetricReport:
    file: str
    method: str
    kl_fit: float
    lsd_db: float
    cd: float

    def to_row(self) -> Dict[str, Any]:
        return asdict(self)


def _values(spec) -> np.ndarray:
    return np.asarray(getattr(spec, "values", spec), dtype=np.float64)


def kl_fit(y, y_hat) -> float:
    """KL(y | y_hat) per unit mass of y"""
    y_values = _values(y)
    kl = kl_divergence(y_values, _values(y_hat))
    mass = float(np.sum(y_values))
    return kl / mass if mass > 0 else kl


def log_spectral_distance(a: Spectrogram, b: Spectrogram, floor_db: float = -80.0) -> float:
    """RMS of 20 log10((|a| + d) / (|b| + d)) in dB, d = floor relative to the peak of ``a``"""
    a_mag = _values(a)
    b_mag = _values(b)
    if a_mag.shape != b_mag.shape:
        raise DimensionMismatchError(f"Spectrograms differ in shape: {a_mag.shape} vs {b_mag.shape}")
    if getattr(a, "power_p", 1) == 2:
        a_mag = np.sqrt(a_mag)
    if getattr(b, "power_p", 1) == 2:
        b_mag = np.sqrt(b_mag)

    peak = float(np.max(a_mag)) if a_mag.size else 0.0
    delta = 10.0 ** (floor_db / 20.0) * (peak if peak > 0 else 1.0)
    diff = 20.0 * np.log10((a_mag + delta) / (b_mag + delta))
    return float(np.sqrt(np.mean(diff ** 2)))


def _cepstra(samples: np.ndarray, frame_len: int, hop: int, order: int):
    if samples.size < frame_len:
        samples = np.pad(samples, (0, frame_len - samples.size))
    frames = np.lib.stride_tricks.sliding_window_view(samples, frame_len)[::hop]
    frames = frames * scipy.signal.get_window("hann", frame_len, fftbins=True)
    log_mag = np.log(np.maximum(np.abs(np.fft.rfft(frames, axis=1)), LOG_FLOOR))
    cepstrum = np.fft.irfft(log_mag, n=frame_len, axis=1)
    energy = np.sum(frames ** 2, axis=1)
    return cepstrum[:, 1:order + 1], energy


def cepstral_distance(
    ref: Signal,
    test: Signal,
    order: int = 24,
    frame_len: int = 512,
    hop: int = 256,
    active_range_db: float = 40.0,
) -> float:
    """Mean truncated-cepstrum distance over the active frames of ``ref``.

    c0 is left out, so a pure gain difference scores zero.
    """
    if ref.sample_rate_hz != test.sample_rate_hz:
        raise SampleRateMismatchError(f"{ref.sample_rate_hz} Hz vs {test.sample_rate_hz} Hz")
    if len(ref) != len(test):
        raise LengthMismatchError(f"Signals differ in length: {len(ref)} vs {len(test)}")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")

    c_ref, energy = _cepstra(ref.samples, frame_len, hop, order)
    c_test, _ = _cepstra(test.samples, frame_len, hop, order)
    active = energy >= np.max(energy) * 10.0 ** (-active_range_db / 10.0)
    per_frame = CD_SCALE * np.sqrt(2.0 * np.sum((c_ref - c_test) ** 2, axis=1))
    return float(np.mean(per_frame[active]))
