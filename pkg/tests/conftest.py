import numpy as np
import pytest

from src.audio.signal_io import Signal


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noise_signal(rng):
    return Signal(rng.uniform(-0.5, 0.5, size=16000), 16000)
