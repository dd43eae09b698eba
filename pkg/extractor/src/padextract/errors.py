"""Error taxonomy for the extraction pipeline.

ConfigError subclasses map to exit code 2, DataError subclasses to 3.
"""


class PadExtractError(Exception):
    """Base class for all extraction errors."""


class ConfigError(PadExtractError):
    """Bad invocation: unknown backbone, unreadable inputs, invalid flags."""


class DataError(PadExtractError):
    """Bad data: empty videos, undecodable frames, non-finite vectors."""


class EmptyVideo(DataError):
    def __init__(self, video_id):
        super().__init__(f"video {video_id!r} has no frames")
        self.video_id = video_id


class NoFaceDetected(DataError):
    def __init__(self, frame_id):
        super().__init__(f"no face detected in frame {frame_id!r}")
        self.frame_id = frame_id


class BackboneLoadError(ConfigError):
    def __init__(self, spec, reason):
        super().__init__(f"cannot load backbone {spec!r}: {reason}")


class ExportError(DataError):
    pass
