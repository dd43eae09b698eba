"""End-to-end protocol runners: known-attacks, leave-one-out unknown
species, cross-database, and a generic grouped-splits runner.

Each run goes split construction -> probe training -> frame scoring ->
frame-mean video scores -> optional cross-model fusion -> metrics. The
evaluation unit is the video. Folds are independent and seeded as
seed XOR fold_index, so results do not depend on execution order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .data import (
    LabeledDataset,
    Label,
    Manifest,
    EmbeddingStore,
    RecordPredicate,
    Split,
    join,
    make_filter,
)
from .errors import (
    ConfigError,
    DataError,
    DatasetMissing,
    FewerThanTwoSpecies,
    MissingSplit,
    SingleClassDataset,
)
from .fusion import FusionRule, fuse_models
from .metrics import MetricsReport, ScoreSet, aggregate, compute_report
from .probe import ProbeHead, TrainConfig, predict_batch, train_head

log = logging.getLogger(__name__)


# -- protocol specifications ------------------------------------------

@dataclass(frozen=True)
class FilterSpec:
    """Declarative record filter used by grouped-splits fold definitions."""

    splits: Optional[tuple[str, ...]] = None
    datasets: Optional[tuple[str, ...]] = None
    species: Optional[tuple[str, ...]] = None
    exclude_species: Optional[tuple[str, ...]] = None
    labels: Optional[tuple[str, ...]] = None

    def predicate(self) -> RecordPredicate:
        return make_filter(
            splits=[Split(s) for s in self.splits] if self.splits else None,
            datasets=self.datasets,
            species=self.species,
            exclude_species=self.exclude_species,
            labels=[Label(v) for v in self.labels] if self.labels else None,
        )

    @classmethod
    def from_dict(cls, obj: dict) -> "FilterSpec":
        def tup(key):
            return tuple(obj[key]) if obj.get(key) else None

        return cls(
            splits=tup("splits"),
            datasets=tup("datasets"),
            species=tup("species"),
            exclude_species=tup("exclude_species"),
            labels=tup("labels"),
        )


@dataclass(frozen=True)
class KnownAttackSpec:
    dataset_id: str
    train_split: Split = Split.TRAIN
    test_split: Split = Split.TEST
    per_species_breakdown: bool = True


@dataclass(frozen=True)
class LeaveOneOutSpec:
    species_list: tuple[str, ...]
    bonafide_split_ratio: float = 0.6
    split_seed: int = 0
    dataset_id: Optional[str] = None

    def __post_init__(self):
        if len(self.species_list) == 0:
            raise ConfigError("species_list must be non-empty")
        if not 0.0 < self.bonafide_split_ratio < 1.0:
            raise ConfigError("bonafide_split_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class CrossDatabaseSpec:
    train_dataset_ids: tuple[str, ...]
    test_dataset_id: str
    train_splits: Optional[tuple[Split, ...]] = None  # None = every split

    def __post_init__(self):
        if self.test_dataset_id in self.train_dataset_ids:
            raise ConfigError("train and test datasets must be disjoint")
        if len(self.train_dataset_ids) == 0:
            raise ConfigError("at least one training dataset required")


@dataclass(frozen=True)
class GroupedFold:
    fold_id: str
    train: FilterSpec
    test: FilterSpec


@dataclass(frozen=True)
class GroupedSplitsSpec:
    folds: tuple[GroupedFold, ...]

    def __post_init__(self):
        if len(self.folds) == 0:
            raise ConfigError("at least one fold required")


Variant = KnownAttackSpec | LeaveOneOutSpec | CrossDatabaseSpec | GroupedSplitsSpec


@dataclass(frozen=True)
class ProtocolSpec:
    variant: Variant
    backbone_ids: tuple[str, ...]
    fusion_rules: tuple[FusionRule, ...] = ()
    fusion_models: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.backbone_ids) == 0:
            raise ConfigError("at least one backbone required")
        if self.fusion_rules and len(self.fusion_models) == 0:
            raise ConfigError("fusion_rules given without fusion_models")
        for m in self.fusion_models:
            if m not in self.backbone_ids:
                raise ConfigError(f"fusion model {m!r} is not a configured backbone")


def parse_protocol_spec(obj: dict) -> ProtocolSpec:
    try:
        kind = obj["variant"]
        if kind == "known_attack":
            variant = KnownAttackSpec(
                dataset_id=obj["dataset_id"],
                train_split=Split(obj.get("train_split", "train")),
                test_split=Split(obj.get("test_split", "test")),
                per_species_breakdown=bool(obj.get("per_species_breakdown", True)),
            )
        elif kind == "leave_one_out":
            variant = LeaveOneOutSpec(
                species_list=tuple(obj["species_list"]),
                bonafide_split_ratio=float(obj.get("bonafide_split_ratio", 0.6)),
                split_seed=int(obj.get("split_seed", 0)),
                dataset_id=obj.get("dataset_id"),
            )
        elif kind == "cross_database":
            splits = obj.get("train_splits")
            variant = CrossDatabaseSpec(
                train_dataset_ids=tuple(obj["train_datasets"]),
                test_dataset_id=obj["test_dataset"],
                train_splits=tuple(Split(s) for s in splits) if splits else None,
            )
        elif kind == "grouped_splits":
            variant = GroupedSplitsSpec(
                folds=tuple(
                    GroupedFold(
                        fold_id=f["fold_id"],
                        train=FilterSpec.from_dict(f["train"]),
                        test=FilterSpec.from_dict(f["test"]),
                    )
                    for f in obj["folds"]
                )
            )
        else:
            raise ConfigError(f"unknown protocol variant {kind!r}")
        return ProtocolSpec(
            variant=variant,
            backbone_ids=tuple(obj["backbones"]),
            fusion_rules=tuple(FusionRule(r) for r in obj.get("fusion_rules", [])),
            fusion_models=tuple(obj.get("fusion_models", [])),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid protocol config: {exc}") from exc


# -- results -----------------------------------------------------------

@dataclass(frozen=True)
class FoldAudit:
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    train_species: frozenset[str]
    test_species: frozenset[str]


@dataclass
class ProtocolResult:
    folds: dict[str, dict[str, MetricsReport]]
    aggregates: dict[str, dict[str, tuple[float, float]]]
    audits: dict[str, FoldAudit] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


# -- fold execution ----------------------------------------------------

def _video_scores(head: ProbeHead, dataset: LabeledDataset) -> dict[str, tuple[float, Label, str]]:
    """Per-video (mean score, label, species) from frame-level predictions."""
    frame_scores = predict_batch(head, dataset.vectors)
    per_video: dict[str, list[float]] = {}
    meta: dict[str, tuple[Label, str]] = {}
    for rec, score in zip(dataset.records, frame_scores):
        per_video.setdefault(rec.video_id, []).append(float(score))
        meta[rec.video_id] = (rec.label, rec.pai_species)
    return {
        vid: (float(np.mean(scores)), meta[vid][0], meta[vid][1])
        for vid, scores in per_video.items()
    }


def _score_set(videos: Mapping[str, tuple[float, Label, str]],
               species: Optional[str] = None) -> Optional[ScoreSet]:
    attacks = [
        s for s, label, sp in videos.values()
        if label is Label.ATTACK and (species is None or sp == species)
    ]
    bona = [s for s, label, _ in videos.values() if label is Label.BONA_FIDE]
    if not attacks or not bona:
        return None
    return ScoreSet(np.array(attacks), np.array(bona))


def _run_fold(
    manifest: Manifest,
    stores: Mapping[str, EmbeddingStore],
    spec: ProtocolSpec,
    config: TrainConfig,
    train_pred: RecordPredicate,
    test_pred: RecordPredicate,
    species_breakdown: Sequence[str] = (),
) -> tuple[dict[str, MetricsReport], FoldAudit]:
    """Train one head per backbone, score the test set, fuse and report."""
    train_records = [r for r in manifest.records if train_pred(r)]
    test_records = [r for r in manifest.records if test_pred(r)]
    if not train_records:
        raise MissingSplit("empty training split")
    if not test_records:
        raise MissingSplit("empty test split")
    audit = FoldAudit(
        train_ids=frozenset(r.sample_id for r in train_records),
        test_ids=frozenset(r.sample_id for r in test_records),
        train_species=frozenset(
            r.pai_species for r in train_records if r.label is Label.ATTACK
        ),
        test_species=frozenset(
            r.pai_species for r in test_records if r.label is Label.ATTACK
        ),
    )
    if audit.train_ids & audit.test_ids:
        raise DataError("train/test sample_id overlap detected")

    model_videos: dict[str, dict[str, tuple[float, Label, str]]] = {}
    reports: dict[str, MetricsReport] = {}
    for backbone in spec.backbone_ids:
        store = stores[backbone]
        train_ds = join(manifest, store, train_pred)
        head, _ = train_head(train_ds, config, backbone_id=backbone)
        test_ds = join(manifest, store, test_pred)
        videos = _video_scores(head, test_ds)
        model_videos[backbone] = videos
        overall = _score_set(videos)
        if overall is None:
            raise SingleClassDataset("test split lacks one of the classes")
        reports[backbone] = compute_report(overall)
        for sp in species_breakdown:
            subset = _score_set(videos, species=sp)
            if subset is None:
                log.warning("species %r absent from the test split; report omitted", sp)
                continue
            reports[f"{backbone}[species={sp}]"] = compute_report(subset)

    for rule in spec.fusion_rules:
        fused: dict[str, tuple[float, Label, str]] = {}
        base = model_videos[spec.fusion_models[0]]
        for vid, (_, label, sp) in base.items():
            per_model = [model_videos[m][vid][0] for m in spec.fusion_models]
            fused[vid] = (fuse_models(per_model, rule), label, sp)
        key = f"{rule.value}[{'+'.join(spec.fusion_models)}]"
        overall = _score_set(fused)
        if overall is None:
            raise SingleClassDataset("fused test split lacks one of the classes")
        reports[key] = compute_report(overall)
        for sp in species_breakdown:
            subset = _score_set(fused, species=sp)
            if subset is not None:
                reports[f"{key}[species={sp}]"] = compute_report(subset)
    return reports, audit


def _execute_folds(folds, jobs: int):
    """Run (fold_id, thunk) pairs, preserving fold order in the output."""
    if jobs <= 1:
        return [(fold_id, thunk()) for fold_id, thunk in folds]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [(fold_id, pool.submit(thunk)) for fold_id, thunk in folds]
        return [(fold_id, fut.result()) for fold_id, fut in futures]


def _collect(fold_outputs, metadata: dict) -> ProtocolResult:
    folds = {}
    audits = {}
    for fold_id, (reports, audit) in fold_outputs:
        folds[fold_id] = reports
        audits[fold_id] = audit
    per_model: dict[str, list[MetricsReport]] = {}
    for reports in folds.values():
        for key, rep in reports.items():
            if "[species=" in key:
                continue
            per_model.setdefault(key, []).append(rep)
    aggregates = {key: aggregate(reps) for key, reps in per_model.items()}
    return ProtocolResult(folds=folds, aggregates=aggregates, audits=audits, metadata=metadata)


def _fold_config(config: TrainConfig, fold_index: int) -> TrainConfig:
    return dataclasses.replace(config, seed=config.seed ^ fold_index)


def _check_stores(spec: ProtocolSpec, stores: Mapping[str, EmbeddingStore]):
    for backbone in spec.backbone_ids:
        if backbone not in stores:
            raise ConfigError(f"no embedding store for backbone {backbone!r}")


# -- runners -----------------------------------------------------------

def run_known_attack(
    manifest: Manifest,
    stores: Mapping[str, EmbeddingStore],
    spec: ProtocolSpec,
    config: TrainConfig,
) -> ProtocolResult:
    variant = spec.variant
    assert isinstance(variant, KnownAttackSpec)
    _check_stores(spec, stores)
    train_pred = make_filter(splits=[variant.train_split], datasets=[variant.dataset_id])
    test_pred = make_filter(splits=[variant.test_split], datasets=[variant.dataset_id])
    species = manifest.species() if variant.per_species_breakdown else ()
    reports, audit = _run_fold(
        manifest, stores, spec, _fold_config(config, 0), train_pred, test_pred,
        species_breakdown=species,
    )
    return _collect(
        [(variant.dataset_id, (reports, audit))],
        metadata={"protocol": "known_attack", "dataset": variant.dataset_id},
    )


def _bonafide_in_train(video_id: str, seed: int, ratio: float) -> bool:
    digest = hashlib.sha256(f"{seed}:{video_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64 < ratio


def run_leave_one_out(
    manifest: Manifest,
    stores: Mapping[str, EmbeddingStore],
    spec: ProtocolSpec,
    config: TrainConfig,
    jobs: int = 1,
) -> ProtocolResult:
    variant = spec.variant
    assert isinstance(variant, LeaveOneOutSpec)
    _check_stores(spec, stores)
    if len(variant.species_list) < 2:
        raise FewerThanTwoSpecies("leave-one-out needs at least two species")

    def in_dataset(rec):
        return variant.dataset_id is None or rec.dataset_id == variant.dataset_id

    def bf_train(rec):
        return _bonafide_in_train(rec.video_id, variant.split_seed, variant.bonafide_split_ratio)

    folds = []
    for index, held_out in enumerate(variant.species_list):

        def train_pred(rec, held_out=held_out):
            if not in_dataset(rec):
                return False
            if rec.label is Label.ATTACK:
                return rec.pai_species != held_out
            return bf_train(rec)

        def test_pred(rec, held_out=held_out):
            if not in_dataset(rec):
                return False
            if rec.label is Label.ATTACK:
                return rec.pai_species == held_out
            return not bf_train(rec)

        def thunk(index=index, train_pred=train_pred, test_pred=test_pred, held_out=held_out):
            reports, audit = _run_fold(
                manifest, stores, spec, _fold_config(config, index), train_pred, test_pred
            )
            if held_out in audit.train_species:
                raise DataError(f"held-out species {held_out!r} leaked into training")
            return reports, audit

        folds.append((held_out, thunk))
    outputs = _execute_folds(folds, jobs)
    return _collect(
        outputs,
        metadata={
            "protocol": "leave_one_out",
            "species": list(variant.species_list),
            "bonafide_split_ratio": variant.bonafide_split_ratio,
            "bonafide_partition": "seeded sha256 of video_id, shared across folds",
        },
    )


def run_cross_database(
    manifest: Manifest,
    stores: Mapping[str, EmbeddingStore],
    spec: ProtocolSpec,
    config: TrainConfig,
) -> ProtocolResult:
    variant = spec.variant
    assert isinstance(variant, CrossDatabaseSpec)
    _check_stores(spec, stores)
    present = {r.dataset_id for r in manifest.records}
    for ds in (*variant.train_dataset_ids, variant.test_dataset_id):
        if ds not in present:
            raise DatasetMissing(ds)
    train_pred = make_filter(
        datasets=variant.train_dataset_ids,
        splits=variant.train_splits,
    )
    test_pred = make_filter(datasets=[variant.test_dataset_id])
    fold_id = f"{'&'.join(variant.train_dataset_ids)}->{variant.test_dataset_id}"
    reports, audit = _run_fold(
        manifest, stores, spec, _fold_config(config, 0), train_pred, test_pred
    )
    return _collect(
        [(fold_id, (reports, audit))],
        metadata={
            "protocol": "cross_database",
            "train_datasets": list(variant.train_dataset_ids),
            "test_dataset": variant.test_dataset_id,
            "hter_threshold": "d-eer threshold of the test score set",
        },
    )


def run_grouped_splits(
    manifest: Manifest,
    stores: Mapping[str, EmbeddingStore],
    spec: ProtocolSpec,
    config: TrainConfig,
    jobs: int = 1,
) -> ProtocolResult:
    variant = spec.variant
    assert isinstance(variant, GroupedSplitsSpec)
    _check_stores(spec, stores)
    folds = []
    for index, fold in enumerate(variant.folds):

        def thunk(index=index, fold=fold):
            return _run_fold(
                manifest, stores, spec, _fold_config(config, index),
                fold.train.predicate(), fold.test.predicate(),
            )

        folds.append((fold.fold_id, thunk))
    outputs = _execute_folds(folds, jobs)
    return _collect(outputs, metadata={"protocol": "grouped_splits"})


def run_protocol(
    manifest: Manifest,
    stores: Mapping[str, EmbeddingStore],
    spec: ProtocolSpec,
    config: TrainConfig,
    jobs: int = 1,
) -> ProtocolResult:
    if isinstance(spec.variant, KnownAttackSpec):
        return run_known_attack(manifest, stores, spec, config)
    if isinstance(spec.variant, LeaveOneOutSpec):
        return run_leave_one_out(manifest, stores, spec, config, jobs=jobs)
    if isinstance(spec.variant, CrossDatabaseSpec):
        return run_cross_database(manifest, stores, spec, config)
    return run_grouped_splits(manifest, stores, spec, config, jobs=jobs)


# -- serialization -----------------------------------------------------

def result_to_dict(result: ProtocolResult) -> dict:
    from .report import report_to_dict

    return {
        "folds": {
            fold_id: {key: report_to_dict(rep) for key, rep in reports.items()}
            for fold_id, reports in result.folds.items()
        },
        "aggregates": {
            key: {f: {"mean": m, "std": s} for f, (m, s) in agg.items()}
            for key, agg in result.aggregates.items()
        },
        "metadata": result.metadata,
    }
