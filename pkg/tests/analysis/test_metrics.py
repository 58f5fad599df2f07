import numpy as np
import pytest

from src.audio.signal_io import Signal
from src.audio.stft import Spectrogram
from src.analysis.metrics import MetricReport, cepstral_distance, kl_fit, log_spectral_distance
from src.core.exceptions import DimensionMismatchError, LengthMismatchError, SampleRateMismatchError


@pytest.fixture
def magnitudes(rng):
    return rng.uniform(0.5, 1.0, size=(33, 20))


def test_kl_fit_identical(magnitudes):
    assert kl_fit(magnitudes, magnitudes) == pytest.approx(0.0, abs=1e-12)


def test_kl_fit_constant_ratio(magnitudes):
    """y_hat = 2y costs 2 - 1 - ln 2 per unit mass"""
    assert kl_fit(Spectrogram(magnitudes), Spectrogram(2 * magnitudes)) == pytest.approx(1 - np.log(2))


def test_kl_fit_grows_with_perturbation(rng, magnitudes):
    """Doubling a perturbation never lowers the fit"""
    for _ in range(10):
        direction = rng.uniform(0.0, 1.0, size=magnitudes.shape)
        scale = 0.01
        previous = kl_fit(magnitudes, magnitudes + scale * direction)
        for _ in range(6):
            scale *= 2
            current = kl_fit(magnitudes, magnitudes + scale * direction)
            assert current >= previous
            previous = current


def test_lsd_identical(magnitudes):
    assert log_spectral_distance(Spectrogram(magnitudes), Spectrogram(magnitudes)) == 0.0


def test_lsd_constant_ratio(magnitudes):
    """Doubling every magnitude gives 20 log10 2 dB"""
    lsd = log_spectral_distance(Spectrogram(magnitudes), Spectrogram(2 * magnitudes))
    assert lsd == pytest.approx(20 * np.log10(2), abs=1e-3)


def test_lsd_power_spectrogram(magnitudes):
    """Power spectrograms are compared on magnitudes"""
    lsd = log_spectral_distance(Spectrogram(magnitudes ** 2, power_p=2), Spectrogram(4 * magnitudes ** 2, power_p=2))
    assert lsd == pytest.approx(20 * np.log10(2), abs=1e-3)


def test_lsd_floor_keeps_zero_bins_finite(magnitudes):
    lsd = log_spectral_distance(Spectrogram(magnitudes), Spectrogram(np.zeros_like(magnitudes)))
    assert np.isfinite(lsd) and lsd > 0


def test_lsd_shape_mismatch(magnitudes):
    with pytest.raises(DimensionMismatchError):
        log_spectral_distance(Spectrogram(magnitudes), Spectrogram(magnitudes[:, 1:]))


def test_cd_identical(noise_signal):
    assert cepstral_distance(noise_signal, noise_signal) == 0.0


def test_cd_ignores_gain(noise_signal):
    """A pure gain only moves c0, which is left out"""
    assert cepstral_distance(noise_signal, noise_signal.scaled(0.5)) == pytest.approx(0.0, abs=1e-9)


def test_cd_symmetric_when_all_frames_active(rng, noise_signal):
    other = Signal(noise_signal.samples + 0.3 * rng.standard_normal(len(noise_signal)), 16000)
    forward = cepstral_distance(noise_signal, other, active_range_db=300.0)
    backward = cepstral_distance(other, noise_signal, active_range_db=300.0)
    assert forward > 0
    assert forward == pytest.approx(backward)


def test_cd_checks_inputs(noise_signal):
    with pytest.raises(LengthMismatchError):
        cepstral_distance(noise_signal, noise_signal.trimmed(1000))
    with pytest.raises(SampleRateMismatchError):
        cepstral_distance(noise_signal, Signal(noise_signal.samples, 8000))


def test_metric_report_row():
    row = MetricReport("a.wav", "integrated", 0.1, 2.0, 3.0).to_row()
    assert row == {"file": "a.wav", "method": "integrated", "kl_fit": 0.1, "lsd_db": 2.0, "cd": 3.0}
