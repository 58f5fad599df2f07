"""Deterministic speech-like test material."""
import logging

import numpy as np
import scipy.signal

from ..audio.signal_io import Signal

logger = logging.getLogger(__name__)

FORMANT_SETS = (
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (570.0, 840.0, 2410.0),
    (300.0, 870.0, 2240.0),
    (530.0, 1840.0, 2480.0),
)
FORMANT_BANDWIDTH_HZ = 120.0


def _syllable(n_samples: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    f0_start, f0_end = rng.uniform(100.0, 220.0, size=2)
    f0 = np.linspace(f0_start, f0_end, n_samples)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    formants = np.array(FORMANT_SETS[rng.integers(len(FORMANT_SETS))])

    n_harmonics = int(0.5 * sample_rate / max(f0_start, f0_end))
    harmonics = np.arange(1, n_harmonics + 1)
    freqs = f0[:, None] * harmonics[None, :]
    resonance = np.exp(-0.5 * ((freqs[:, :, None] - formants) / FORMANT_BANDWIDTH_HZ) ** 2).sum(axis=2)
    amplitude = (0.05 + resonance) / harmonics[None, :]
    voiced = np.sum(amplitude * np.sin(phase[:, None] * harmonics[None, :]), axis=1)
    return voiced * scipy.signal.windows.tukey(n_samples, alpha=0.3)


def speech_like_signal(duration_s: float, sample_rate: int = 16000, seed: int = 0) -> Signal:
    """Voiced harmonic syllables with gliding pitch and formant peaks, separated by pauses.

    Peak amplitude is 0.5.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    rng = np.random.default_rng(seed)
    total = int(round(duration_s * sample_rate))
    out = np.zeros(total)
    position = int(rng.uniform(0.02, 0.1) * sample_rate)
    while position < total:
        length = min(int(rng.uniform(0.15, 0.3) * sample_rate), total - position)
        if length > 16:
            out[position:position + length] = _syllable(length, sample_rate, rng)
        position += length + int(rng.uniform(0.05, 0.2) * sample_rate)

    peak = np.max(np.abs(out))
    if peak > 0:
        out *= 0.5 / peak
    logger.debug(f"Generated {duration_s}s of speech-like signal with seed {seed}")
    return Signal(out, sample_rate)
