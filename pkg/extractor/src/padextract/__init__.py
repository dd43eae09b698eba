"""Embedding extraction pipeline producing padeval-compatible files."""

from .backbones import BackboneId, GenericEncoder, HFEncoder, load_encoder
from .errors import (
    BackboneLoadError,
    ConfigError,
    DataError,
    EmptyVideo,
    ExportError,
    NoFaceDetected,
    PadExtractError,
)
from .export import ExtractRecord, write_embeddings, write_manifest
from .faces import CROP_SIZE, augment_brightness, detect_and_crop, passthrough_crop
from .frames import FrameSamplePlan, plan_frames

__all__ = [
    "BackboneId",
    "BackboneLoadError",
    "ConfigError",
    "CROP_SIZE",
    "DataError",
    "EmptyVideo",
    "ExportError",
    "ExtractRecord",
    "FrameSamplePlan",
    "GenericEncoder",
    "HFEncoder",
    "NoFaceDetected",
    "PadExtractError",
    "augment_brightness",
    "detect_and_crop",
    "load_encoder",
    "passthrough_crop",
    "plan_frames",
    "write_embeddings",
    "write_manifest",
]
