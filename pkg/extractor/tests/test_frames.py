import pytest

from padextract.errors import ConfigError, EmptyVideo
from padextract.frames import plan_frames


class TestPlanFrames:
    def test_exact_length_is_identity(self):
        assert plan_frames(25, 25).indices == tuple(range(25))

    def test_forty_nine_gives_even_indices(self):
        assert plan_frames(49, 25).indices == tuple(range(0, 49, 2))

    def test_short_video_keeps_all_frames(self):
        assert plan_frames(10, 25).indices == tuple(range(10))

    def test_single_target_frame(self):
        assert plan_frames(100, 1).indices == (0,)

    def test_endpoints_always_included(self):
        for t in (25, 26, 30, 49, 100, 1000):
            indices = plan_frames(t, 25).indices
            assert indices[0] == 0 and indices[-1] == t - 1

    def test_strictly_increasing_within_bounds(self):
        for t in range(1, 200):
            indices = plan_frames(t, 25).indices
            assert all(b > a for a, b in zip(indices, indices[1:]))
            assert all(0 <= i < t for i in indices)
            assert len(indices) == min(t, 25)

    def test_pure_function(self):
        assert plan_frames(49, 25) == plan_frames(49, 25)

    def test_empty_video_rejected(self):
        with pytest.raises(EmptyVideo):
            plan_frames(0, 25)

    def test_bad_target_rejected(self):
        with pytest.raises(ConfigError):
            plan_frames(10, 0)
