"""Exception hierarchy shared across the package.

Two broad families matter for the CLI exit-code contract:
``ConfigError`` (exit 2) for unusable configuration/arguments and
``DataError`` (exit 3) for invalid or inconsistent input data.
"""


class PadEvalError(Exception):
    pass


class ConfigError(PadEvalError):
    pass


class DataError(PadEvalError):
    pass


# -- manifest / embedding store ----------------------------------------

class MalformedLine(DataError):
    def __init__(self, line_no, detail=""):
        self.line_no = line_no
        super().__init__(f"malformed manifest line {line_no}: {detail}")


class DuplicateSampleId(DataError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"duplicate sample_id: {sample_id!r}")


class InconsistentVideoLabel(DataError):
    def __init__(self, video_id):
        self.video_id = video_id
        super().__init__(f"video {video_id!r} maps to conflicting (dataset, label, species)")


class BadMagic(DataError):
    pass


class DimMismatch(DataError):
    pass


class TruncatedFile(DataError):
    pass


class NonFiniteValue(DataError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"non-finite embedding component for sample {sample_id!r}")


class MissingEmbedding(DataError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"no embedding for sample {sample_id!r}")


# -- probe training ----------------------------------------------------

class SingleClassDataset(DataError):
    pass


class NonFiniteLoss(DataError):
    pass


# -- fusion ------------------------------------------------------------

class EmptyFrameList(DataError):
    pass


class EmptyModelList(DataError):
    pass


class MissingModelForVideo(DataError):
    def __init__(self, video_id, model_id):
        self.video_id = video_id
        self.model_id = model_id
        super().__init__(f"video {video_id!r} has no scores for model {model_id!r}")


# -- metrics -----------------------------------------------------------

class EmptyClass(DataError):
    pass


class EmptyList(DataError):
    pass


# -- protocols ---------------------------------------------------------

class MissingSplit(DataError):
    pass


class FewerThanTwoSpecies(DataError):
    pass


class DatasetMissing(DataError):
    def __init__(self, dataset_id):
        self.dataset_id = dataset_id
        super().__init__(f"dataset {dataset_id!r} not present in the manifest")
