"""Frame-to-video mean fusion and cross-model score fusion.

Fusion order is fixed: per-model frame scores are first averaged into one
video score per model, then the cross-model rule (MIN/MAX/SUM/AVG) is
applied at the video level. For SUM/AVG the alternative order coincides;
for MIN/MAX it does not, so the order is part of the contract.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import DataError, EmptyFrameList, EmptyModelList, MissingModelForVideo


class FusionRule(enum.Enum):
    MIN = "min"
    MAX = "max"
    SUM = "sum"
    AVG = "avg"

    def apply(self, scores: Sequence[float]) -> float:
        if len(scores) == 0:
            raise EmptyModelList("cannot fuse an empty score list")
        if self is FusionRule.MIN:
            return min(scores)
        if self is FusionRule.MAX:
            return max(scores)
        total = math.fsum(scores)
        if self is FusionRule.SUM:
            return total
        return total / len(scores)


@dataclass(frozen=True)
class VideoScore:
    video_id: str
    model_id: str
    score: float
    frame_count: int

    def __post_init__(self):
        if self.frame_count < 1:
            raise DataError("frame_count must be >= 1")
        if not math.isfinite(self.score):
            raise DataError(f"non-finite video score for {self.video_id!r}")


def video_score(frame_scores: Sequence[float], video_id: str, model_id: str) -> VideoScore:
    """Mean-rule fusion of all frame scores of one video under one model."""
    if len(frame_scores) == 0:
        raise EmptyFrameList(f"no frame scores for video {video_id!r}")
    if not all(math.isfinite(s) for s in frame_scores):
        raise DataError(f"non-finite frame score for video {video_id!r}")
    return VideoScore(
        video_id=video_id,
        model_id=model_id,
        score=math.fsum(frame_scores) / len(frame_scores),
        frame_count=len(frame_scores),
    )


def fuse_models(per_model_scores: Sequence[float], rule: FusionRule) -> float:
    if len(per_model_scores) == 0:
        raise EmptyModelList("cannot fuse an empty model list")
    if not all(math.isfinite(s) for s in per_model_scores):
        raise DataError("non-finite model score")
    return rule.apply(per_model_scores)


def fuse_pipeline(
    frame_scores: Mapping[str, Mapping[str, Sequence[float]]],
    rule: FusionRule,
) -> dict[str, float]:
    """Fuse a model_id -> video_id -> frame-score table into one score per video.

    Every video must be present for every model.
    """
    if len(frame_scores) == 0:
        raise EmptyModelList("no models to fuse")
    all_videos: dict[str, None] = {}
    for per_video in frame_scores.values():
        for vid in per_video:
            all_videos.setdefault(vid)
    fused = {}
    for vid in all_videos:
        per_model = []
        for model_id, per_video in frame_scores.items():
            if vid not in per_video:
                raise MissingModelForVideo(vid, model_id)
            per_model.append(video_score(per_video[vid], vid, model_id).score)
        fused[vid] = fuse_models(per_model, rule)
    return fused
