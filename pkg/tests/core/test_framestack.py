import numpy as np
import pytest

from src.audio.stft import Spectrogram
from src.config.engine_config import EngineConfig
from src.core.exceptions import DimensionMismatchError, InvalidWindowError
from src.core.framestack import (
    StackedSpectrogram,
    replicate_rir,
    run_stacked,
    stack,
    stacked_cost,
    stacked_gain,
    stacked_update_h,
)
from src.core.integrated import integrated_gain, integrated_update_h, run_integrated
from src.core.nctf import rowwise_convolve
from tests.helpers import random_instance

EPS = 1e-12


def test_stack_single_frame_is_identity(rng):
    y = rng.random((4, 7))
    np.testing.assert_array_equal(stack(y, 1).values, y)


def test_stack_two_frames():
    """Columns c1, c2, c3 become [c1;c2], [c2;c3], [c3;0]"""
    y = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    expected = np.array([
        [1.0, 2.0, 3.0],
        [4.0, 5.0, 6.0],
        [2.0, 3.0, 0.0],
        [5.0, 6.0, 0.0],
    ])
    np.testing.assert_array_equal(stack(y, 2).values, expected)


def test_stack_zero_input():
    assert np.all(stack(np.zeros((3, 5)), 4).values == 0)


def test_stack_block_consistency(rng):
    """Block l of column t holds base frame t+l, or zeros past the end"""
    y = rng.random((5, 12))
    stacked = stack(Spectrogram(y), 4)
    np.testing.assert_array_equal(stacked.unstack(), y)
    for _ in range(50):
        block = int(rng.integers(4))
        t = int(rng.integers(12))
        column = stacked.block(block)[:, t]
        if t + block < 12:
            np.testing.assert_array_equal(column, y[:, t + block])
        else:
            assert np.all(column == 0)


def test_stack_rejects_bad_window(rng):
    with pytest.raises(InvalidWindowError):
        stack(rng.random((3, 4)), 0)


def test_stacked_spectrogram_shape_checked():
    with pytest.raises(DimensionMismatchError):
        StackedSpectrogram(np.zeros((7, 3)), t_st=2, base_k=3)


def test_update_h_single_block_bit_identical(rng):
    """T_st=1 reproduces the integrated H update exactly"""
    y, h, w, x = random_instance(rng)
    np.testing.assert_array_equal(
        stacked_update_h(h, w, x, stack(y, 1).values, EPS),
        integrated_update_h(h, w, x, y, EPS),
    )


def test_update_h_stacked_fixed_point(rng):
    """An exact stacked model leaves H unchanged"""
    _, h, _, x = random_instance(rng, k=6, t=10)
    w_st = rng.uniform(0.1, 1.0, size=(18, 4))
    y_st = rowwise_convolve(w_st @ x, replicate_rir(h, 3))
    np.testing.assert_allclose(stacked_update_h(h, w_st, x, y_st, EPS), h, rtol=1e-10)


def test_update_h_matches_block_summed_oracle(rng):
    """Every block feeds the same K-row H: loop oracle on a two-block case"""
    n_bins, n_frames, lh, t_st = 2, 3, 2, 2
    h = rng.uniform(0.2, 1.0, (n_bins, lh))
    w_st = rng.uniform(0.1, 1.0, (n_bins * t_st, 2))
    x = rng.uniform(0.1, 1.0, (2, n_frames))
    y_st = rng.uniform(0.1, 1.0, (n_bins * t_st, n_frames))
    s_st = w_st @ x

    expected = np.zeros_like(h)
    for k in range(n_bins):
        for tau in range(lh):
            num = den = 0.0
            for block in range(t_st):
                row = block * n_bins + k
                for t in range(n_frames):
                    if t - tau < 0:
                        continue
                    model = sum(h[k, j] * s_st[row, t - j] for j in range(lh) if t - j >= 0)
                    num += y_st[row, t] / model * s_st[row, t - tau]
                    den += s_st[row, t - tau]
            expected[k, tau] = h[k, tau] * num / den
    np.testing.assert_allclose(stacked_update_h(h, w_st, x, y_st, EPS), expected, rtol=1e-10)


def test_gain_single_block_bit_identical(rng):
    _, h, w, x = random_instance(rng)
    np.testing.assert_array_equal(stacked_gain(h, w, x, 1, EPS), integrated_gain(h, w, x, EPS))


def test_gain_unit_single_tap(rng):
    w_st = rng.uniform(0.1, 1.0, (12, 3))
    x = rng.uniform(0.1, 1.0, (3, 9))
    np.testing.assert_allclose(stacked_gain(np.ones((4, 1)), w_st, x, 3, EPS), 1.0)


def test_gain_matches_hand_summed_blocks():
    """Uniform two-block model: frame t collects block 0 of column t and block 1 of column t-1"""
    h = np.array([[1.0, 0.5]])
    w_st = np.array([[1.0], [2.0]])
    x = np.array([[1.0, 1.0, 1.0, 1.0]])
    # block 0 is [1,1,1,1], convolved [1,1.5,1.5,1.5]; block 1 is [2,2,2,2], convolved [2,3,3,3]
    numerator = np.array([1.0, 1 + 2, 1 + 2, 1 + 2])
    denominator = np.array([1.0, 1.5 + 2, 1.5 + 3, 1.5 + 3])
    np.testing.assert_allclose(stacked_gain(h, w_st, x, 2, EPS)[0], numerator / denominator)


def test_gain_block_count_checked(rng):
    with pytest.raises(DimensionMismatchError):
        stacked_gain(np.ones((4, 2)), np.ones((12, 2)), np.ones((2, 5)), 2, EPS)


def test_single_block_run_matches_integrated(rng):
    """T_st=1 through the stacked runner reproduces the integrated run"""
    y, _, _, _ = random_instance(rng)
    config = EngineConfig(rank=4, lh=3, iterations=5, t_st=1)
    stacked = run_stacked(Spectrogram(y), config)
    plain = run_integrated(Spectrogram(y), config)
    np.testing.assert_allclose(stacked[0], plain[0], rtol=1e-12)
    np.testing.assert_allclose(stacked[1].cost_trace, plain[1].cost_trace, rtol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_pure_mode_cost_non_increasing(seed):
    """Sweeps on a 16x32 spectrogram with a six-frame window never raise the stacked cost"""
    rng = np.random.default_rng(300 + seed)
    y, _, _, _ = random_instance(rng, k=16, t=32)
    config = EngineConfig(rank=4, lh=3, iterations=20, t_st=6, pure_mode=True, lambda_value=0.02, seed=seed)
    gain, report, model, rir = run_stacked(Spectrogram(y), config)
    assert report.is_non_increasing(1e-9)
    assert model.w.shape == (96, 4)
    assert gain.shape == y.shape
    assert report.final_cost == pytest.approx(stacked_cost(stack(y, 6).values, rir.h, model.w, model.x, 0.02)[0])


def test_production_run(rng):
    y, _, _, _ = random_instance(rng, k=8, t=20)
    gain, report, model, rir = run_stacked(Spectrogram(y), EngineConfig(rank=4, lh=3, iterations=6, t_st=6))
    assert np.all(np.isfinite(gain)) and np.all(gain >= 0)
    np.testing.assert_allclose(rir.h[:, 0], 1.0)
    assert report.cost_name == "L1_st_cost"
