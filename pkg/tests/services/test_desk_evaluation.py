import pytest

from src.analysis.metrics import MetricReport
from src.config.engine_config import EngineConfig
from src.services.desk_evaluation import SceneScore, mean_processed_lsd, score_scene, score_scenes


def make_score(seed, lsd, cd):
    return SceneScore(
        seed=seed,
        reverberant=MetricReport("u", "reverberant", 0.2, 10.0, 5.0),
        processed=MetricReport("u", "integrated", 0.1, lsd, cd),
    )


def test_scene_score_improvement():
    assert make_score(0, 8.0, 4.0).improved
    assert not make_score(0, 8.0, 6.0).improved
    assert make_score(0, 8.0, 4.0).lsd_improvement == 2.0


def test_mean_processed_lsd():
    assert mean_processed_lsd([make_score(0, 8.0, 4.0), make_score(1, 6.0, 4.0)]) == 7.0


def test_score_scene_runs():
    score = score_scene(0, EngineConfig(iterations=2, rank=8, frame_ms=32.0, seed=0))
    assert score.seed == 0
    assert score.reverberant.lsd_db > 0


@pytest.mark.slow
def test_integrated_improves_hard_room():
    """Default integrated settings improve LSD and CD on most synthetic utterances"""
    scores = score_scenes(range(5))
    assert sum(s.improved for s in scores) >= 4


@pytest.mark.slow
@pytest.mark.parametrize("alternative", [{"power_p": 2}, {"frame_ms": 16.0}])
def test_default_analysis_is_no_worse(alternative):
    """Magnitude spectrograms and 64 ms frames give output LSD no worse than power spectrograms or 16 ms frames"""
    default = mean_processed_lsd(score_scenes(range(5), EngineConfig()))
    other = mean_processed_lsd(score_scenes(range(5), EngineConfig(**alternative)))
    assert default <= other
