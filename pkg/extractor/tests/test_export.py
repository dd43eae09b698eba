import numpy as np
import pytest

from padeval.data import load_embeddings, load_manifest

from padextract.errors import ExportError
from padextract.export import ExtractRecord, write_embeddings, write_manifest


def record(i, video="v0", augmented=False):
    suffix = "#aug0" if augmented else ""
    return ExtractRecord(
        sample_id=f"{video}_f{i:05d}{suffix}",
        video_id=video,
        frame_index=i,
        dataset_id="D",
        label="attack",
        pai_species="print",
        split="train",
        augmented=augmented,
    )


class TestManifest:
    def test_loadable_by_evaluation_package(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest([record(i) for i in range(25)], path)
        manifest = load_manifest(path)
        assert len(manifest.records) == 25
        assert {r.video_id for r in manifest.records} == {"v0"}

    def test_augmented_flag_is_ignored_downstream(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest([record(0), record(0, augmented=True)], path)
        manifest = load_manifest(path)
        assert len(manifest.records) == 2


class TestEmbeddings:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "e.pade"
        rng = np.random.default_rng(0)
        ids = [f"s{i}" for i in range(4)]
        vectors = rng.normal(size=(4, 8)).astype(np.float32)
        write_embeddings(ids, vectors, path)
        store = load_embeddings(path)
        assert store.dim == 8
        for sid, vec in zip(ids, vectors):
            assert np.array_equal(store.entries[sid], vec)

    def test_nan_refused(self, tmp_path):
        vectors = np.zeros((2, 4), dtype=np.float32)
        vectors[1, 2] = np.nan
        with pytest.raises(ExportError):
            write_embeddings(["a", "b"], vectors, tmp_path / "e.pade")

    def test_count_mismatch_refused(self, tmp_path):
        with pytest.raises(ExportError):
            write_embeddings(["a"], np.zeros((2, 4), dtype=np.float32),
                             tmp_path / "e.pade")

    def test_empty_refused(self, tmp_path):
        with pytest.raises(ExportError):
            write_embeddings([], np.zeros((0, 4), dtype=np.float32),
                             tmp_path / "e.pade")
