import pytest

from ringside.model import PipelineConfig, RingGeometry


@pytest.fixture
def ring():
    return RingGeometry(corners=((100, 80), (540, 80), (540, 400), (100, 400)))


@pytest.fixture
def desk_cfg():
    """Scaled-down timing so whole sessions fit in fast tests."""
    return PipelineConfig(
        fps=10,
        bout_duration_s=12,
        rest_duration_s=6,
        cue_window_frames=10,
        boundary_refractory_s=3.5,
        minibout_len_frames=40,
    )
