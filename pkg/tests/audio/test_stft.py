import numpy as np
import pytest

from src.audio.signal_io import Signal
from src.audio.stft import (
    ComplexSpectrogram,
    Spectrogram,
    StftConfig,
    apply_gain_and_synthesize,
    frame_count,
    magnitude,
    spectral_energy,
    sqrt_hann,
    stft_forward,
)
from src.core.exceptions import DimensionMismatchError, SignalTooShortError


@pytest.fixture
def config():
    return StftConfig(frame_len=1024)


def test_frame_and_bin_counts(config, noise_signal):
    """16000 samples with 1024/512 framing give 31 frames of 513 bins"""
    spec = stft_forward(noise_signal, config)
    assert spec.shape == (513, 31)
    assert frame_count(16000, 1024, 512) == 31


def test_zero_signal(config):
    """Silence gives all-zero coefficients"""
    spec = stft_forward(Signal(np.zeros(4096), 16000), config)
    assert np.all(spec.coeffs == 0)


def test_bin_centred_sinusoid(config):
    """A tone at a bin centre keeps at least 90% of frame energy within one bin of it"""
    n = np.arange(16000)
    bin_index = 64
    tone = Signal(np.sin(2 * np.pi * bin_index * n / 1024), 16000)
    power = np.abs(stft_forward(tone, config).coeffs) ** 2

    interior = power[:, 2:-2]
    fraction = interior[bin_index - 1:bin_index + 2].sum(axis=0) / interior.sum(axis=0)
    assert np.all(fraction >= 0.9)


def test_config_validation():
    """Hop must be half a frame and p must be 1 or 2"""
    with pytest.raises(ValueError):
        StftConfig(frame_len=1024, hop=256)
    with pytest.raises(ValueError):
        StftConfig(frame_len=1024, power_p=3)
    assert StftConfig.from_duration(64, 16000).frame_len == 1024


def test_too_short(config):
    """Signals shorter than one frame are rejected"""
    with pytest.raises(SignalTooShortError):
        stft_forward(Signal(np.zeros(1000), 16000), config)


@pytest.mark.parametrize("p,expected", [(1, 5.0), (2, 25.0)])
def test_magnitude_power(p, expected):
    """|3+4i|^p"""
    spec = ComplexSpectrogram(np.array([[3 + 4j]]), StftConfig(frame_len=2, power_p=p), 2)
    assert magnitude(spec).values[0, 0] == pytest.approx(expected)


def test_magnitude_of_zeros():
    """Zero coefficients give a zero spectrogram"""
    spec = ComplexSpectrogram(np.zeros((3, 4), dtype=complex), StftConfig(frame_len=4), 8)
    assert np.all(magnitude(spec).values == 0)


def test_spectrogram_rejects_negative():
    """Spectrogram values are non-negative"""
    with pytest.raises(ValueError):
        Spectrogram(np.array([[1.0, -1.0]]))


@pytest.mark.parametrize("seed", range(3))
def test_unit_gain_round_trip(config, seed):
    """Unit gain reconstructs the input wherever two frames overlap"""
    rng = np.random.default_rng(seed)
    signal = Signal(rng.uniform(-1.0, 1.0, size=16000), 16000)
    spec = stft_forward(signal, config)

    out = apply_gain_and_synthesize(spec, np.ones(spec.shape), 1)
    assert len(out) == len(signal)
    interior = slice(config.frame_len, len(signal) - config.frame_len)
    assert np.max(np.abs(out.samples[interior] - signal.samples[interior])) <= 1e-6


def test_zero_gain(config, noise_signal):
    """Zero gain silences the output"""
    spec = stft_forward(noise_signal, config)
    out = apply_gain_and_synthesize(spec, np.zeros(spec.shape), 1)
    assert np.all(out.samples == 0)


def test_power_gain_is_rooted(config, noise_signal):
    """Gain 0.25 on a power spectrogram scales the waveform by 0.5"""
    spec = stft_forward(noise_signal, StftConfig(frame_len=1024, power_p=2))
    out = apply_gain_and_synthesize(spec, np.full(spec.shape, 0.25), 2)

    interior = slice(1024, len(noise_signal) - 1024)
    np.testing.assert_allclose(out.samples[interior], 0.5 * noise_signal.samples[interior], atol=1e-6)


def test_gain_shape_mismatch(config, noise_signal):
    """Gain must match the spectrogram shape"""
    spec = stft_forward(noise_signal, config)
    with pytest.raises(DimensionMismatchError):
        apply_gain_and_synthesize(spec, np.ones((10, 10)), 1)


def test_parseval_energy(config, noise_signal):
    """Per-frame spectral energy equals the energy of the windowed frame"""
    spec = stft_forward(noise_signal, config)
    window = sqrt_hann(config.frame_len)
    padded = np.zeros((spec.shape[1] - 1) * config.hop + config.frame_len)
    padded[:len(noise_signal)] = noise_signal.samples

    for t in (0, 7, spec.shape[1] - 1):
        frame = padded[t * config.hop:t * config.hop + config.frame_len] * window
        assert spectral_energy(spec)[t] == pytest.approx(np.sum(frame ** 2), rel=1e-6)
