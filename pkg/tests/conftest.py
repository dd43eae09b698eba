import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from padeval.data import Label, Manifest, EmbeddingStore, SampleRecord, Split


def make_record(sample_id, video_id=None, label=Label.BONA_FIDE, species="",
                dataset="D", split=Split.UNASSIGNED, frame_index=0):
    return SampleRecord(
        sample_id=sample_id,
        video_id=video_id or sample_id.split("#")[0],
        frame_index=frame_index,
        dataset_id=dataset,
        label=label,
        pai_species=species,
        split=split,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_manifest():
    records = (
        make_record("bf1#0", "bf1", split=Split.TRAIN),
        make_record("bf2#0", "bf2", split=Split.TEST),
        make_record("at1#0", "at1", Label.ATTACK, "print", split=Split.TRAIN),
        make_record("at2#0", "at2", Label.ATTACK, "replay", split=Split.TEST),
    )
    return Manifest(records)


@pytest.fixture
def small_store(small_manifest, rng):
    dim = 4
    entries = {
        rec.sample_id: rng.normal(size=dim).astype(np.float32)
        for rec in small_manifest.records
    }
    return EmbeddingStore(dim=dim, entries=entries)


def synthetic_protocol_fixture(
    rng,
    species,
    dim=8,
    videos_per_species=4,
    bona_videos=12,
    frames=3,
    datasets=("D",),
    dataset_shift=0.0,
    split_cycle=(Split.TRAIN, Split.TEST),
):
    """Manifest + per-backbone stores with geometrically separable classes.

    Attack embeddings cluster at +1 per coordinate (plus a per-species
    offset in one coordinate), bona fide at -1. `dataset_shift` moves each
    dataset's cloud to emulate cross-database drift.
    """
    records = []
    vectors = {}
    for d_idx, dataset in enumerate(datasets):
        shift = dataset_shift * d_idx
        for v in range(bona_videos):
            vid = f"{dataset}-bf{v}"
            split = split_cycle[v % len(split_cycle)]
            for f in range(frames):
                sid = f"{vid}#{f}"
                records.append(make_record(sid, vid, dataset=dataset, split=split, frame_index=f))
                vectors[sid] = (rng.normal(-1.0 + shift, 0.3, size=dim)).astype(np.float32)
        for s_idx, sp in enumerate(species):
            for v in range(videos_per_species):
                vid = f"{dataset}-{sp}{v}"
                split = split_cycle[v % len(split_cycle)]
                for f in range(frames):
                    sid = f"{vid}#{f}"
                    records.append(
                        make_record(sid, vid, Label.ATTACK, sp, dataset=dataset,
                                    split=split, frame_index=f)
                    )
                    vec = rng.normal(1.0 + shift, 0.3, size=dim)
                    vec[s_idx % dim] += 0.5
                    vectors[sid] = vec.astype(np.float32)
    manifest = Manifest(tuple(records))
    store = EmbeddingStore(dim=dim, entries=vectors)
    return manifest, store
