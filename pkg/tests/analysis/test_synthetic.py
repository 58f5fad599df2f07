import numpy as np
import pytest

from src.analysis.synthetic import speech_like_signal


def test_length_and_peak():
    signal = speech_like_signal(2.0, seed=1)
    assert len(signal) == 32000
    assert signal.sample_rate_hz == 16000
    assert np.max(np.abs(signal.samples)) == pytest.approx(0.5)


def test_deterministic_in_seed():
    first = speech_like_signal(1.0, seed=4)
    np.testing.assert_array_equal(first.samples, speech_like_signal(1.0, seed=4).samples)
    assert not np.array_equal(first.samples, speech_like_signal(1.0, seed=5).samples)


def test_has_pauses():
    """Syllables are separated by silence"""
    samples = speech_like_signal(3.0, seed=0).samples
    assert np.mean(samples == 0) > 0.1


def test_rejects_non_positive_duration():
    with pytest.raises(ValueError):
        speech_like_signal(0.0)
