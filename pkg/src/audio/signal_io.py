"""Mono WAV input/output and time-domain helpers."""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
import logging

import numpy as np
import scipy.signal
import soundfile as sf

from ..core.exceptions import (
    AudioIoError,
    CorruptHeaderError,
    NonFiniteSampleError,
    SampleRateMismatchError,
    UnsupportedFormatError,
)

logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0
SUPPORTED_SUBTYPES = {"PCM_16", "FLOAT"}
# Plain RIFF/WAVE and WAVE_FORMAT_EXTENSIBLE
WAV_FORMATS = {"WAV", "WAVEX"}

PathLike = Union[str, Path]


@dataclass
class Signal:
    """Mono audio samples with their sample rate"""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def scaled(self, factor: float) -> "Signal":
        return Signal(self.samples * factor, self.sample_rate_hz)

    def trimmed(self, length: int) -> "Signal":
        return Signal(self.samples[:length], self.sample_rate_hz)


def read_wav(path: PathLike, expected_rate: Optional[int] = None) -> Signal:
    """Read a mono PCM16 or float32 WAV file into [-1, 1] samples.

    PCM16 codes are divided by 32768. When ``expected_rate`` is given a
    file at another rate is rejected; nothing is resampled.
    """
    path = Path(path)
    if not path.is_file():
        raise AudioIoError(f"Audio file not found: {path}")

    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        raise CorruptHeaderError(f"Cannot parse header of {path}: {e}") from e

    if info.format not in WAV_FORMATS:
        raise UnsupportedFormatError(f"{path} is {info.format}, only RIFF/WAVE is supported")
    if info.channels != 1:
        raise UnsupportedFormatError(f"{path} has {info.channels} channels, only mono is supported")
    if info.subtype not in SUPPORTED_SUBTYPES:
        raise UnsupportedFormatError(f"{path} uses {info.subtype}, expected PCM_16 or FLOAT")

    try:
        samples, sample_rate = sf.read(str(path), dtype="float64", always_2d=False)
    except RuntimeError as e:
        raise AudioIoError(f"Failed to read {path}: {e}") from e

    if samples.size == 0:
        raise CorruptHeaderError(f"{path} contains no samples")
    if expected_rate is not None and sample_rate != expected_rate:
        raise SampleRateMismatchError(
            f"{path} is sampled at {sample_rate} Hz, expected {expected_rate} Hz"
        )

    logger.debug(f"Read {samples.size} samples at {sample_rate} Hz from {path}")
    return Signal(samples, int(sample_rate))


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clamp to the PCM16 code range and round to int16 codes"""
    codes = np.round(np.asarray(samples, dtype=np.float64) * PCM16_SCALE)
    return np.clip(codes, -32768, 32767).astype(np.int16)


def write_wav(signal: Signal, path: PathLike) -> None:
    """Write a signal as a 16-bit PCM mono WAV file, clamping out-of-range samples"""
    if not np.all(np.isfinite(signal.samples)):
        raise NonFiniteSampleError("Refusing to write a signal with NaN or infinite samples")

    clipped = int(np.count_nonzero(np.abs(signal.samples) > 1.0))
    if clipped:
        logger.warning(f"Clamping {clipped} out-of-range samples while writing {path}")

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        sf.write(str(path), quantize_pcm16(signal.samples), signal.sample_rate_hz,
                 subtype="PCM_16", format="WAV")
    except (RuntimeError, OSError) as e:
        raise AudioIoError(f"Failed to write {path}: {e}") from e
    logger.debug(f"Wrote {len(signal)} samples to {path}")


def convolve_time(signal: Signal, rir: Signal) -> Signal:
    """Full linear convolution y(n) = sum_m h(m) s(n - m)"""
    if signal.sample_rate_hz != rir.sample_rate_hz:
        raise SampleRateMismatchError(
            f"Signal at {signal.sample_rate_hz} Hz cannot be convolved with RIR at {rir.sample_rate_hz} Hz"
        )
    out = scipy.signal.convolve(signal.samples, rir.samples, mode="full", method="auto")
    return Signal(out, signal.sample_rate_hz)
