import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padeval import data
from padeval.data import (
    EmbeddingStore,
    Label,
    Manifest,
    Split,
    join,
    load_embeddings,
    load_manifest,
    make_filter,
    write_embeddings,
    write_manifest,
)
from padeval.errors import (
    BadMagic,
    DataError,
    DuplicateSampleId,
    InconsistentVideoLabel,
    MalformedLine,
    MissingEmbedding,
    NonFiniteValue,
    TruncatedFile,
)

from conftest import make_record


def write_lines(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")


def row(sample_id, label="bona_fide", species="", video=None, split="train"):
    return {
        "sample_id": sample_id,
        "video_id": video or sample_id,
        "frame_index": 0,
        "dataset_id": "C",
        "label": label,
        "pai_species": species,
        "split": split,
    }


class TestManifestIO:
    def test_minimal_two_record_file(self, tmp_path):
        p = tmp_path / "m.jsonl"
        write_lines(p, [row("a"), row("b", label="attack", species="print")])
        m = load_manifest(p)
        assert len(m) == 2
        assert m.records[1].label is Label.ATTACK

    def test_duplicate_sample_id(self, tmp_path):
        p = tmp_path / "m.jsonl"
        write_lines(p, [row("a"), row("a")])
        with pytest.raises(DuplicateSampleId):
            load_manifest(p)

    def test_bonafide_with_species_is_malformed(self, tmp_path):
        p = tmp_path / "m.jsonl"
        write_lines(p, [row("a", label="bona_fide", species="print")])
        with pytest.raises(MalformedLine):
            load_manifest(p)

    def test_inconsistent_video_label(self, tmp_path):
        p = tmp_path / "m.jsonl"
        write_lines(p, [row("a", video="v"), row("b", video="v", label="attack", species="print")])
        with pytest.raises(InconsistentVideoLabel):
            load_manifest(p)

    def test_unknown_keys_ignored(self, tmp_path):
        p = tmp_path / "m.jsonl"
        r = row("a")
        r["extra"] = {"nested": True}
        write_lines(p, [r])
        assert len(load_manifest(p)) == 1

    def test_malformed_line_reports_line_number(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text(json.dumps(row("a")) + "\nnot json\n")
        with pytest.raises(MalformedLine) as err:
            load_manifest(p)
        assert err.value.line_no == 2

    def test_roundtrip_single_record(self, tmp_path):
        m = Manifest((make_record("a#0", "a", Label.ATTACK, "mask", split=Split.DEV),))
        p = tmp_path / "m.jsonl"
        write_manifest(m, p)
        assert load_manifest(p).records == m.records


class TestEmbeddingIO:
    def make_store(self, rng, dim=4, count=2):
        entries = {
            f"s{i}": rng.normal(size=dim).astype(np.float32) for i in range(count)
        }
        return EmbeddingStore(dim=dim, entries=entries)

    def test_roundtrip_identity(self, tmp_path, rng):
        store = self.make_store(rng)
        p = tmp_path / "e.pade"
        write_embeddings(store, p)
        loaded = load_embeddings(p)
        assert loaded.dim == store.dim
        assert set(loaded.entries) == set(store.entries)
        for sid in store.entries:
            assert loaded.entries[sid].tobytes() == store.entries[sid].tobytes()

    def test_file_size_matches_layout(self, tmp_path, rng):
        # header 18 bytes + per record (2 + len(id) + dim*4)
        store = EmbeddingStore(
            dim=2,
            entries={f"v{i}": rng.normal(size=2).astype(np.float32) for i in range(3)},
        )
        p = tmp_path / "e.pade"
        write_embeddings(store, p)
        assert p.stat().st_size == 18 + 3 * (2 + 2 + 8)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "e.pade"
        p.write_bytes(b"NOPE" + b"\x00" * 14)
        with pytest.raises(BadMagic):
            load_embeddings(p)

    def test_truncated_payload(self, tmp_path, rng):
        store = self.make_store(rng)
        p = tmp_path / "e.pade"
        write_embeddings(store, p)
        p.write_bytes(p.read_bytes()[:-3])
        with pytest.raises(TruncatedFile):
            load_embeddings(p)

    def test_nonfinite_rejected_on_load(self, tmp_path):
        header = struct.pack("<4sHIQ", b"PADE", 1, 1, 1)
        rec = struct.pack("<H", 1) + b"x" + struct.pack("<f", float("nan"))
        p = tmp_path / "e.pade"
        p.write_bytes(header + rec)
        with pytest.raises(NonFiniteValue):
            load_embeddings(p)

    def test_nonfinite_rejected_at_construction(self):
        with pytest.raises(NonFiniteValue):
            EmbeddingStore(dim=1, entries={"x": np.array([np.inf], dtype=np.float32)})

    def test_empty_store_rejected_at_write(self, tmp_path):
        store = EmbeddingStore.__new__(EmbeddingStore)
        object.__setattr__(store, "dim", 4)
        object.__setattr__(store, "entries", {})
        with pytest.raises(DataError):
            write_embeddings(store, tmp_path / "e.pade")

    def test_zero_dim_rejected(self):
        with pytest.raises(DataError):
            EmbeddingStore(dim=0, entries={})

    def test_read_order_independent(self, tmp_path, rng):
        store = self.make_store(rng, count=5)
        p = tmp_path / "e.pade"
        write_embeddings(store, p)
        first = load_embeddings(p)
        second = load_embeddings(p)
        for sid in reversed(list(store.entries)):
            assert np.array_equal(first.entries[sid], second.entries[sid])


class TestJoin:
    def test_split_filter(self, small_manifest, small_store):
        ds = join(small_manifest, small_store, make_filter(splits=[Split.TRAIN]))
        assert len(ds) == 2
        assert all(r.split is Split.TRAIN for r in ds.records)

    def test_missing_embedding(self, small_manifest, small_store):
        entries = dict(small_store.entries)
        entries.pop("at1#0")
        store = EmbeddingStore(dim=small_store.dim, entries=entries)
        with pytest.raises(MissingEmbedding):
            join(small_manifest, store)

    def test_species_exclusion(self, rng):
        records, entries = [], {}
        species = ["silicone", "print", "replay", "silicone", "print",
                   "silicone", "replay", "print", "silicone", "replay"]
        for i, sp in enumerate(species):
            rec = make_record(f"a{i}", f"a{i}", Label.ATTACK, sp)
            records.append(rec)
            entries[rec.sample_id] = rng.normal(size=3).astype(np.float32)
        manifest = Manifest(tuple(records))
        store = EmbeddingStore(dim=3, entries=entries)
        ds = join(manifest, store, make_filter(exclude_species=["silicone"]))
        kept = {r.sample_id for r in ds.records}
        assert kept == {"a1", "a2", "a4", "a6", "a7", "a9"}
        assert all(r.pai_species != "silicone" for r in ds.records)

    def test_join_count_equals_filter_count(self, small_manifest, small_store):
        pred = make_filter(labels=[Label.ATTACK])
        ds = join(small_manifest, small_store, pred)
        assert len(ds) == sum(1 for r in small_manifest.records if pred(r))


ids = st.text(
    alphabet=st.characters(min_codepoint=33, max_codepoint=126), min_size=1, max_size=12
)


@settings(max_examples=40, deadline=None)
@given(
    st.dictionaries(
        ids,
        st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=32),
            min_size=3, max_size=3,
        ),
        min_size=1,
        max_size=8,
    )
)
def test_embedding_roundtrip_property(tmp_path_factory, table):
    store = EmbeddingStore(
        dim=3, entries={k: np.array(v, dtype=np.float32) for k, v in table.items()}
    )
    path = tmp_path_factory.mktemp("emb") / "e.pade"
    write_embeddings(store, path)
    loaded = load_embeddings(path)
    assert set(loaded.entries) == set(store.entries)
    for sid in store.entries:
        assert loaded.entries[sid].tobytes() == store.entries[sid].tobytes()


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(ids, st.sampled_from(["bona_fide", "attack"]), st.sampled_from(list(Split))),
        min_size=1,
        max_size=10,
        unique_by=lambda t: t[0],
    )
)
def test_manifest_roundtrip_property(tmp_path_factory, rows):
    records = tuple(
        make_record(
            sid,
            video_id=sid,
            label=Label(lbl),
            species="print" if lbl == "attack" else "",
            split=split,
        )
        for sid, lbl, split in rows
    )
    manifest = Manifest(records)
    path = tmp_path_factory.mktemp("man") / "m.jsonl"
    write_manifest(manifest, path)
    assert load_manifest(path).records == manifest.records
