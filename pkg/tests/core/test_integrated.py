import numpy as np
import pytest

from src.audio.stft import Spectrogram
from src.config.engine_config import BasisMode, EngineConfig
from src.core.exceptions import DimensionMismatchError
from src.core.integrated import (
    apply_sweep_heuristics,
    integrated_cost,
    integrated_gain,
    integrated_update_h,
    integrated_update_w,
    integrated_update_x,
    run_integrated,
    warm_start,
)
from src.core.nctf import baseline_update_s, init_rir, kl_divergence, resolve_lambda, rowwise_convolve
from tests.helpers import planted_model, random_instance

EPS = 1e-12


def scalar(value):
    return np.array([[value]])


def test_scalar_updates():
    """Hand-evaluated single-entry sweeps: y=6, h=1, w=1, x=2"""
    y = scalar(6.0)
    assert integrated_update_h(scalar(1.0), scalar(1.0), scalar(2.0), y, EPS)[0, 0] == pytest.approx(3.0)
    assert integrated_update_w(scalar(1.0), scalar(1.0), scalar(2.0), y, EPS)[0, 0] == pytest.approx(3.0)
    assert integrated_update_x(scalar(2.0), scalar(1.0), scalar(1.0), y, 0.0, EPS)[0, 0] == pytest.approx(6.0)


def test_exact_model_is_fixed_point(rng):
    """h * (W X) = Y with lambda=0 leaves H, W and X in place"""
    y, h, w, x = planted_model(rng)
    np.testing.assert_allclose(integrated_update_h(h, w, x, y, EPS), h, rtol=1e-10)
    np.testing.assert_allclose(integrated_update_w(w, h, x, y, EPS), w, rtol=1e-10)
    np.testing.assert_allclose(integrated_update_x(x, h, w, y, 0.0, EPS), x, rtol=1e-10)


def test_zero_h_entry_stays_zero(rng):
    y, h, w, x = random_instance(rng)
    h[3, 1] = 0.0
    assert integrated_update_h(h, w, x, y, EPS)[3, 1] == 0.0


def test_identity_basis_reduces_to_baseline(rng):
    """With W = I the X update is the baseline S update"""
    y, h, _, _ = random_instance(rng, k=8, t=12)
    s = rng.uniform(0.1, 1.0, y.shape)
    expected = baseline_update_s(s, h, y, 0.07, EPS)
    actual = integrated_update_x(s, h, np.eye(8), y, 0.07, EPS)
    np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-12)


def test_sparsity_shrinks_activations(rng):
    """A larger lambda never yields larger activations"""
    y, h, w, x = random_instance(rng)
    previous = integrated_update_x(x, h, w, y, 0.0, EPS)
    for lam in (0.1, 1.0, 10.0, 1e6):
        current = integrated_update_x(x, h, w, y, lam, EPS)
        assert np.all(current <= previous)
        previous = current
    assert previous.max() < 1e-3


def test_factor_shapes_checked(rng):
    y, h, w, x = random_instance(rng)
    with pytest.raises(DimensionMismatchError):
        integrated_update_w(w, h, x[:, :-1], y, EPS)


def test_gain_closed_forms():
    """Unit single tap gives 1, two unit taps over constant activations give 0.5, no activations give 0"""
    w = np.full((3, 1), 0.5)
    x = np.full((1, 8), 4.0)
    np.testing.assert_allclose(integrated_gain(np.ones((3, 1)), w, x, EPS), 1.0)
    np.testing.assert_allclose(integrated_gain(np.ones((3, 2)), w, x, EPS)[:, 1:], 0.5)
    assert np.all(integrated_gain(np.ones((3, 2)), w, np.zeros((1, 8)), EPS) == 0)


def test_heuristics_fixed_basis_untouched(rng):
    """A fixed basis keeps its values through normalization"""
    _, h, w, x = random_instance(rng)
    h_out, w_out, x_out = apply_sweep_heuristics(h, w, x, EngineConfig(phi_x=1.0), update_basis=False)
    np.testing.assert_array_equal(w_out, w)
    np.testing.assert_allclose(h_out[:, 0], 1.0)


def test_heuristics_keep_model_before_sharpening(rng):
    """With phi_x = 1 and a decaying H the modelled spectrogram is unchanged"""
    _, h, w, x = random_instance(rng)
    h = np.sort(h, axis=1)[:, ::-1].copy()
    h_out, w_out, x_out = apply_sweep_heuristics(h, w, x, EngineConfig(phi_x=1.0), update_basis=True)
    np.testing.assert_allclose(rowwise_convolve(w_out @ x_out, h_out), rowwise_convolve(w @ x, h), rtol=1e-10)
    np.testing.assert_allclose(w_out.sum(axis=0), 1.0)


def test_warm_start_mode_checks(rng):
    y = rng.random((6, 10))
    with pytest.raises(ValueError):
        warm_start(y, EngineConfig(basis_mode=BasisMode.FIXED_LOWRANK), None)
    with pytest.raises(ValueError):
        warm_start(y, EngineConfig(rank=2), np.ones((6, 2)))
    with pytest.raises(DimensionMismatchError):
        warm_start(y, EngineConfig(basis_mode=BasisMode.FIXED_LOWRANK), np.ones((5, 2)))


def test_warm_start_takes_rank_from_basis(rng):
    y = rng.random((6, 10))
    model = warm_start(y, EngineConfig(basis_mode=BasisMode.FIXED_OVERCOMPLETE), np.ones((6, 7)))
    assert model.rank == 7


def pure_config(**overrides):
    values = dict(rank=4, lh=3, iterations=30, pure_mode=True, lambda_value=0.02, seed=0)
    values.update(overrides)
    return EngineConfig(**values)


@pytest.mark.parametrize("seed", range(20))
def test_pure_mode_cost_non_increasing(seed):
    """Full sweeps never raise the regularized cost"""
    rng = np.random.default_rng(100 + seed)
    y, _, _, _ = random_instance(rng)
    _, report, _, _ = run_integrated(Spectrogram(y), pure_config(seed=seed))
    assert report.is_non_increasing(1e-9)


def test_pure_mode_fixed_basis_non_increasing(rng):
    y, _, w, _ = random_instance(rng)
    config = pure_config(basis_mode=BasisMode.FIXED_LOWRANK)
    _, report, model, _ = run_integrated(Spectrogram(y), config, fixed_basis=w)
    assert report.is_non_increasing(1e-9)
    np.testing.assert_array_equal(model.w, w)


def test_one_sweep_matches_manual_updates(rng):
    """A single iteration is warm start followed by H, W and X updates"""
    y, _, _, _ = random_instance(rng)
    config = pure_config(iterations=1)
    _, report, model, rir = run_integrated(Spectrogram(y), config)

    start = warm_start(y, config, None)
    lam = resolve_lambda(y, config)
    h = integrated_update_h(init_rir(16, 3), start.w, start.x, y, EPS)
    w = integrated_update_w(start.w, h, start.x, y, EPS)
    x = integrated_update_x(start.x, h, w, y, lam, EPS)
    np.testing.assert_array_equal(rir.h, h)
    np.testing.assert_array_equal(model.w, w)
    np.testing.assert_array_equal(model.x, x)
    assert report.final_cost == pytest.approx(integrated_cost(y, h, w, x, lam)[0])


def test_planted_model_recovery():
    """On an exact planted model the fit drops below 1% of its initial value"""
    rng = np.random.default_rng(42)
    y, _, _, _ = planted_model(rng)
    config = pure_config(iterations=1500, lambda_value=0.0)
    _, report, model, rir = run_integrated(Spectrogram(y), config)
    assert report.final_kl <= 0.01 * report.term_traces["kl_term"][0]
    assert report.final_kl == pytest.approx(kl_divergence(y, rowwise_convolve(model.w @ model.x, rir.h)))


def test_same_seed_same_report(rng):
    y, _, _, _ = random_instance(rng)
    first = run_integrated(Spectrogram(y), EngineConfig(rank=4, lh=3, iterations=8))[1]
    second = run_integrated(Spectrogram(y), EngineConfig(rank=4, lh=3, iterations=8))[1]
    assert first.cost_trace == second.cost_trace


def test_production_gain_is_bounded(rng):
    """Gains are finite and below 1 / min first tap"""
    y, _, _, _ = random_instance(rng)
    gain, _, _, rir = run_integrated(Spectrogram(y), EngineConfig(rank=4, lh=3, iterations=10))
    assert np.all(np.isfinite(gain)) and np.all(gain >= 0)
    assert gain.max() <= 1.0 / rir.h[:, 0].min() + 1e-9
    assert np.all(np.diff(rir.h, axis=1) <= 0)


def test_direct_synthesis_gain(rng):
    """Direct synthesis returns W X / Y"""
    y, _, _, _ = random_instance(rng)
    gain, _, model, _ = run_integrated(Spectrogram(y), EngineConfig(rank=4, lh=3, iterations=3, direct_synthesis=True))
    np.testing.assert_allclose(gain, model.direct_estimate() / (y + EPS))
