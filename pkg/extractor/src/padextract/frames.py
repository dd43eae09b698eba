"""Even temporal sampling of video frames."""

from dataclasses import dataclass

from .errors import ConfigError, EmptyVideo


@dataclass(frozen=True)
class FrameSamplePlan:
    target_frames: int
    indices: tuple

    def __post_init__(self):
        for a, b in zip(self.indices, self.indices[1:]):
            if b <= a:
                raise ConfigError("frame indices must be strictly increasing")


def plan_frames(video_length, target_frames=25):
    """Pick up to `target_frames` indices spread evenly over a video.

    For videos with at least `target_frames` frames the indices are
    round(j * (T-1) / (k-1)), deduplicated in order; shorter videos keep
    every frame. Pure function of its arguments.
    """
    if target_frames < 1:
        raise ConfigError(f"target_frames must be >= 1, got {target_frames}")
    if video_length < 1:
        raise EmptyVideo("<unnamed>")
    if video_length < target_frames:
        indices = tuple(range(video_length))
    elif target_frames == 1:
        indices = (0,)
    else:
        step = (video_length - 1) / (target_frames - 1)
        raw = (int(j * step + 0.5) for j in range(target_frames))
        seen = dict.fromkeys(raw)  # dedupe, preserving order
        indices = tuple(seen)
    return FrameSamplePlan(target_frames=target_frames, indices=indices)
