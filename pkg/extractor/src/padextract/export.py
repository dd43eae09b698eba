"""Writers for the manifest and embedding file formats consumed downstream.

The formats are written independently here (no import of the evaluation
package): a JSON-lines manifest and a binary embedding container with magic
'PADE', u16 version, u32 dimension, u64 record count, then per record a
u16-length UTF-8 sample id followed by dim little-endian float32 values.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import ExportError

FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


@dataclass(frozen=True)
class ExtractRecord:
    sample_id: str
    video_id: str
    frame_index: int
    dataset_id: str
    label: str  # "bona_fide" | "attack"
    pai_species: str
    split: str
    augmented: bool = False


def _atomic_write_bytes(path, payload):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(records, path):
    lines = []
    for rec in records:
        row = {
            "sample_id": rec.sample_id,
            "video_id": rec.video_id,
            "frame_index": rec.frame_index,
            "dataset_id": rec.dataset_id,
            "label": rec.label,
            "pai_species": rec.pai_species,
            "split": rec.split,
        }
        if rec.augmented:
            row["augmented"] = True
        lines.append(json.dumps(row, sort_keys=True))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_embeddings(sample_ids, vectors, path):
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(sample_ids):
        raise ExportError(
            f"expected {len(sample_ids)} vectors, got array of shape {vectors.shape}"
        )
    if vectors.shape[0] == 0:
        raise ExportError("refusing to write an empty embedding store")
    if not np.isfinite(vectors).all():
        raise ExportError("refusing to export non-finite embedding values")
    dim = vectors.shape[1]
    chunks = [_HEADER.pack(b"PADE", FORMAT_VERSION, dim, len(sample_ids))]
    for sid, vec in zip(sample_ids, vectors):
        encoded = sid.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ExportError(f"sample id too long: {sid!r}")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(vec.astype("<f4").tobytes())
    _atomic_write_bytes(path, b"".join(chunks))
