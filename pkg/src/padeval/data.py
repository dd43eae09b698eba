"""Manifests, labels and the binary embedding container.

Manifest files are UTF-8 JSON lines, one record per line, with keys
{sample_id, video_id, frame_index, dataset_id, label, pai_species, split};
unknown keys are ignored. Embedding files are a small binary format:

    bytes 0-3   magic "PADE"
    bytes 4-5   format_version, u16 LE (currently 1)
    bytes 6-9   dim, u32 LE
    bytes 10-17 count, u64 LE
    then `count` records, each:
        u16 LE sample_id byte length, UTF-8 sample_id, dim x f32 LE

All loaded objects are immutable and safe to share across workers.
"""

from __future__ import annotations

import enum
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BadMagic,
    DataError,
    DimMismatch,
    DuplicateSampleId,
    InconsistentVideoLabel,
    MalformedLine,
    MissingEmbedding,
    NonFiniteValue,
    TruncatedFile,
)

MAGIC = b"PADE"
FORMAT_VERSION = 1


class Label(enum.Enum):
    BONA_FIDE = "bona_fide"
    ATTACK = "attack"


class Split(enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"
    UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    video_id: str
    frame_index: int
    dataset_id: str
    label: Label
    pai_species: str = ""
    split: Split = Split.UNASSIGNED

    def __post_init__(self):
        if self.frame_index < 0:
            raise DataError(f"negative frame_index for {self.sample_id!r}")
        if self.label is Label.BONA_FIDE and self.pai_species:
            raise DataError(
                f"bona fide sample {self.sample_id!r} carries pai_species {self.pai_species!r}"
            )


@dataclass(frozen=True)
class Manifest:
    records: tuple[SampleRecord, ...]
    format_version: int = 1

    def __post_init__(self):
        seen = set()
        video_key = {}
        for rec in self.records:
            if rec.sample_id in seen:
                raise DuplicateSampleId(rec.sample_id)
            seen.add(rec.sample_id)
            key = (rec.dataset_id, rec.label, rec.pai_species)
            prev = video_key.setdefault(rec.video_id, key)
            if prev != key:
                raise InconsistentVideoLabel(rec.video_id)

    def __len__(self):
        return len(self.records)

    def sample_ids(self) -> set[str]:
        return {r.sample_id for r in self.records}

    def species(self) -> list[str]:
        """Distinct attack species, in first-appearance order."""
        out = []
        for r in self.records:
            if r.label is Label.ATTACK and r.pai_species not in out:
                out.append(r.pai_species)
        return out

    def merged_with(self, other: "Manifest") -> "Manifest":
        return Manifest(self.records + other.records)


@dataclass(frozen=True, eq=False)
class EmbeddingStore:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim <= 0:
            raise DataError("embedding dim must be positive")
        for sid, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise DimMismatch(f"vector for {sid!r} has shape {vec.shape}, dim={self.dim}")
            if not np.all(np.isfinite(vec)):
                raise NonFiniteValue(sid)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, sample_id):
        return sample_id in self.entries


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Records paired with their embedding vectors, in manifest order."""

    records: tuple[SampleRecord, ...]
    vectors: np.ndarray  # (n, dim) float32

    def __post_init__(self):
        if len(self.records) != self.vectors.shape[0]:
            raise DataError("record/vector count mismatch")

    def __len__(self):
        return len(self.records)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def labels(self) -> np.ndarray:
        """Groundtruth vector, 1 for attack and 0 for bona fide."""
        return np.array([1.0 if r.label is Label.ATTACK else 0.0 for r in self.records])


# -- manifest I/O ------------------------------------------------------

_REQUIRED_KEYS = ("sample_id", "video_id", "frame_index", "dataset_id", "label")


def _record_from_obj(obj: dict, line_no: int) -> SampleRecord:
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise MalformedLine(line_no, f"missing key {key!r}")
    try:
        label = Label(obj["label"])
    except ValueError:
        raise MalformedLine(line_no, f"unknown label {obj['label']!r}")
    try:
        split = Split(obj.get("split", "unassigned"))
    except ValueError:
        raise MalformedLine(line_no, f"unknown split {obj['split']!r}")
    try:
        return SampleRecord(
            sample_id=str(obj["sample_id"]),
            video_id=str(obj["video_id"]),
            frame_index=int(obj["frame_index"]),
            dataset_id=str(obj["dataset_id"]),
            label=label,
            pai_species=str(obj.get("pai_species", "") or ""),
            split=split,
        )
    except DataError as exc:
        raise MalformedLine(line_no, str(exc))


def load_manifest(path) -> Manifest:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON: {exc.msg}")
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "not a JSON object")
            records.append(_record_from_obj(obj, line_no))
    return Manifest(tuple(records))


def _record_to_obj(rec: SampleRecord) -> dict:
    return {
        "sample_id": rec.sample_id,
        "video_id": rec.video_id,
        "frame_index": rec.frame_index,
        "dataset_id": rec.dataset_id,
        "label": rec.label.value,
        "pai_species": rec.pai_species,
        "split": rec.split.value,
    }


def atomic_write_bytes(path, payload: bytes):
    """Write via a sibling temp file and rename, so readers never see partial files."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(manifest: Manifest, path):
    lines = [json.dumps(_record_to_obj(r), sort_keys=True) for r in manifest.records]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8") if lines else b"")


# -- embedding I/O -----------------------------------------------------

_HEADER = struct.Struct("<4sHIQ")


def load_embeddings(path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise TruncatedFile("file shorter than header")
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise BadMagic(f"unsupported format_version {version}")
    if dim == 0 or count == 0:
        raise DimMismatch("dim and count must be positive")
    entries = {}
    offset = _HEADER.size
    vec_bytes = dim * 4
    for _ in range(count):
        if offset + 2 > len(data):
            raise TruncatedFile("truncated record header")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise TruncatedFile("truncated record payload")
        sample_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(sample_id)
        if sample_id in entries:
            raise DuplicateSampleId(sample_id)
        vec.setflags(write=False)
        entries[sample_id] = vec
    return EmbeddingStore(dim=dim, entries=entries)


def write_embeddings(store: EmbeddingStore, path):
    if store.dim <= 0 or len(store) == 0:
        raise DataError("refusing to write empty embedding store")
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, store.dim, len(store))]
    for sample_id, vec in store.entries.items():
        raw = sample_id.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(np.asarray(vec, dtype="<f4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


# -- joining -----------------------------------------------------------

RecordPredicate = Callable[[SampleRecord], bool]


def make_filter(
    splits: Optional[Iterable[Split]] = None,
    datasets: Optional[Iterable[str]] = None,
    species: Optional[Iterable[str]] = None,
    exclude_species: Optional[Iterable[str]] = None,
    labels: Optional[Iterable[Label]] = None,
) -> RecordPredicate:
    """Build a record predicate from optional allow/deny lists.

    `species` / `exclude_species` only constrain attack records; bona fide
    records pass those clauses untouched.
    """
    splits = set(splits) if splits is not None else None
    datasets = set(datasets) if datasets is not None else None
    species = set(species) if species is not None else None
    exclude_species = set(exclude_species) if exclude_species is not None else None
    labels = set(labels) if labels is not None else None

    def predicate(rec: SampleRecord) -> bool:
        if splits is not None and rec.split not in splits:
            return False
        if datasets is not None and rec.dataset_id not in datasets:
            return False
        if labels is not None and rec.label not in labels:
            return False
        if rec.label is Label.ATTACK:
            if species is not None and rec.pai_species not in species:
                return False
            if exclude_species is not None and rec.pai_species in exclude_species:
                return False
        return True

    return predicate


def join(
    manifest: Manifest,
    store: EmbeddingStore,
    predicate: Optional[RecordPredicate] = None,
) -> LabeledDataset:
    """Pair filtered manifest records with their embedding vectors."""
    selected = [r for r in manifest.records if predicate is None or predicate(r)]
    vectors = np.empty((len(selected), store.dim), dtype=np.float32)
    for i, rec in enumerate(selected):
        if rec.sample_id not in store:
            raise MissingEmbedding(rec.sample_id)
        vectors[i] = store.entries[rec.sample_id]
    vectors.setflags(write=False)
    return LabeledDataset(records=tuple(selected), vectors=vectors)
