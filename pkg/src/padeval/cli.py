"""Command-line surface: train, score, fuse, eval, protocol, report-det.

Exit codes: 0 success, 2 usage/config error, 3 data/validation error.
All randomness flows from --seed (fallback: the PAD_EVAL_SEED environment
variable); reruns with identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from . import data, fusion, metrics, probe, protocols, report
from .errors import ConfigError, DataError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

FORMATS = ("json", "text-table", "det-csv", "det-svg")


def _default_seed() -> int:
    env = os.environ.get("PAD_EVAL_SEED")
    return int(env) if env else 0


def _parse_embeddings(values: list[str]) -> dict[str, str]:
    """Parse repeated model_id=path arguments."""
    out = {}
    for item in values:
        if "=" not in item:
            raise ConfigError(f"--embeddings expects model_id=path, got {item!r}")
        model_id, path = item.split("=", 1)
        if model_id in out:
            raise ConfigError(f"duplicate embeddings for model {model_id!r}")
        out[model_id] = path
    return out


def _require_paths(*paths):
    for p in paths:
        if not os.path.exists(p):
            raise ConfigError(f"path does not exist: {p}")


def _write_text(path, text: str):
    data.atomic_write_bytes(path, text.encode("utf-8"))


def _split_filter(args):
    splits = None
    if args.split and args.split != "all":
        splits = [data.Split(args.split)]
    datasets = [args.dataset] if getattr(args, "dataset", None) else None
    return data.make_filter(splits=splits, datasets=datasets)


def _train_config(args) -> probe.TrainConfig:
    return probe.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


# -- commands ----------------------------------------------------------

def cmd_train(args) -> int:
    _require_paths(args.manifest, args.embeddings)
    manifest = data.load_manifest(args.manifest)
    store = data.load_embeddings(args.embeddings)
    dataset = data.join(manifest, store, _split_filter(args))
    head, log = probe.train_head(dataset, _train_config(args), backbone_id=args.backbone_id)
    probe.save_head(head, args.out_head)
    if args.out_log:
        _write_text(
            args.out_log,
            json.dumps(
                {"epoch_losses": list(log.epoch_losses), "final_loss": log.final_loss},
                sort_keys=True,
            )
            + "\n",
        )
    return EXIT_OK


def _score_lines(rows) -> str:
    return "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows)


def cmd_score(args) -> int:
    _require_paths(args.manifest, args.embeddings, args.head)
    manifest = data.load_manifest(args.manifest)
    store = data.load_embeddings(args.embeddings)
    head = probe.load_head(args.head)
    dataset = data.join(manifest, store, _split_filter(args))
    scores = probe.predict_batch(head, dataset.vectors)
    model_id = head.backbone_id or "head"
    if args.out_frame_scores:
        rows = [
            {"id": rec.sample_id, "video_id": rec.video_id, "model_id": model_id,
             "score": float(s)}
            for rec, s in zip(dataset.records, scores)
        ]
        _write_text(args.out_frame_scores, _score_lines(rows))
    per_video: dict[str, list[float]] = {}
    for rec, s in zip(dataset.records, scores):
        per_video.setdefault(rec.video_id, []).append(float(s))
    video_rows = []
    for vid, frame_scores in per_video.items():
        vs = fusion.video_score(frame_scores, vid, model_id)
        video_rows.append(
            {"id": vid, "model_id": model_id, "score": vs.score, "frame_count": vs.frame_count}
        )
    _write_text(args.out_video_scores, _score_lines(video_rows))
    return EXIT_OK


def _load_score_file(path) -> tuple[str, dict[str, float]]:
    model_id = None
    scores = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                vid, mid, score = row["id"], row["model_id"], float(row["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: bad score record ({exc})")
            if model_id is None:
                model_id = mid
            scores[vid] = score
    if model_id is None:
        raise DataError(f"{path}: empty score file")
    return model_id, scores


def cmd_fuse(args) -> int:
    _require_paths(*args.scores)
    rule = fusion.FusionRule(args.rule)
    inputs = [_load_score_file(p) for p in args.scores]
    all_ids: dict[str, None] = {}
    for _, scores in inputs:
        for vid in scores:
            all_ids.setdefault(vid)
    fused_model = f"{rule.value}[{'+'.join(mid for mid, _ in inputs)}]"
    rows = []
    for vid in all_ids:
        per_model = []
        for mid, scores in inputs:
            if vid not in scores:
                raise fusion.MissingModelForVideo(vid, mid)
            per_model.append(scores[vid])
        rows.append(
            {"id": vid, "model_id": fused_model, "score": fusion.fuse_models(per_model, rule)}
        )
    _write_text(args.out, _score_lines(rows))
    return EXIT_OK


def cmd_eval(args) -> int:
    _require_paths(args.manifest, args.scores)
    manifest = data.load_manifest(args.manifest)
    labels = {}
    for rec in manifest.records:
        labels[rec.video_id] = rec.label
        labels[rec.sample_id] = rec.label
    model_id, scores = _load_score_file(args.scores)
    attacks, bona = [], []
    for vid, score in scores.items():
        if vid not in labels:
            raise DataError(f"scored id {vid!r} has no label in the manifest")
        (attacks if labels[vid] is data.Label.ATTACK else bona).append(score)
    score_set = metrics.ScoreSet(np.array(attacks), np.array(bona))
    tau = None if args.hter_threshold is None else float(args.hter_threshold)
    rep = metrics.compute_report(score_set, hter_threshold=tau)
    os.makedirs(args.out_dir, exist_ok=True)
    base = os.path.join(args.out_dir, _sanitize(model_id))
    formats = args.formats.split(",")
    if "json" in formats:
        _write_text(base + ".report.json", report.report_to_json(rep))
    if "text-table" in formats:
        table = report.result_table({"all": {model_id: rep}}, {model_id: metrics.aggregate([rep])})
        _write_text(base + ".report.txt", table)
    if "det-csv" in formats:
        _write_text(base + ".det.csv", report.det_to_csv(rep.det))
    if "det-svg" in formats:
        _write_text(base + ".det.svg", report.det_svg([(model_id, rep.det)]))
    return EXIT_OK


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._+-]+", "_", name)


def cmd_protocol(args) -> int:
    _require_paths(args.protocol_config, *args.manifest)
    stores_paths = _parse_embeddings(args.embeddings)
    _require_paths(*stores_paths.values())
    with open(args.protocol_config, "r", encoding="utf-8") as fh:
        try:
            config_obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid protocol config JSON: {exc}")
    spec = protocols.parse_protocol_spec(config_obj)
    manifest = data.load_manifest(args.manifest[0])
    for extra in args.manifest[1:]:
        manifest = manifest.merged_with(data.load_manifest(extra))
    stores = {mid: data.load_embeddings(path) for mid, path in stores_paths.items()}
    result = protocols.run_protocol(
        manifest, stores, spec, _train_config(args), jobs=args.jobs
    )
    os.makedirs(args.out_dir, exist_ok=True)
    formats = args.formats.split(",")
    if "json" in formats:
        _write_text(
            os.path.join(args.out_dir, "protocol_result.json"),
            json.dumps(protocols.result_to_dict(result), sort_keys=True, indent=2) + "\n",
        )
    if "text-table" in formats:
        _write_text(
            os.path.join(args.out_dir, "protocol_result.txt"),
            report.result_table(result.folds, result.aggregates),
        )
    if "det-csv" in formats or "det-svg" in formats:
        for fold_id in sorted(result.folds):
            reports = result.folds[fold_id]
            if "det-csv" in formats:
                for key in sorted(reports):
                    path = os.path.join(
                        args.out_dir, f"{_sanitize(fold_id)}__{_sanitize(key)}.det.csv"
                    )
                    _write_text(path, report.det_to_csv(reports[key].det))
            if "det-svg" in formats:
                curves = [(key, reports[key].det) for key in sorted(reports)]
                path = os.path.join(args.out_dir, f"{_sanitize(fold_id)}.det.svg")
                _write_text(path, report.det_svg(curves, title=f"DET: {fold_id}"))
    return EXIT_OK


def cmd_report_det(args) -> int:
    curves = []
    for item in args.det_csv:
        if "=" in item:
            label, path = item.split("=", 1)
        else:
            label, path = os.path.basename(item), item
        _require_paths(path)
        with open(path, "r", encoding="utf-8") as fh:
            try:
                points = report.det_from_csv(fh.read())
            except ValueError as exc:
                raise DataError(str(exc))
        if not points:
            raise DataError(f"{path}: empty DET csv")
        curves.append((label, points))
    _write_text(args.out, report.det_svg(curves))
    return EXIT_OK


# -- argument parsing --------------------------------------------------

def _add_train_opts(p):
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=_default_seed())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pad-eval",
        description="Presentation attack detection evaluation engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a probe head on frozen embeddings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True, help="embedding store path")
    p.add_argument("--backbone-id", default="")
    p.add_argument("--split", default="train", choices=["train", "dev", "test", "unassigned", "all"])
    p.add_argument("--dataset", default=None)
    p.add_argument("--out-head", required=True)
    p.add_argument("--out-log", default=None)
    _add_train_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="apply a head, write frame and video scores")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--split", default="all", choices=["train", "dev", "test", "unassigned", "all"])
    p.add_argument("--dataset", default=None)
    p.add_argument("--out-frame-scores", default=None)
    p.add_argument("--out-video-scores", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fuse", help="fuse per-model score files")
    p.add_argument("--scores", action="append", required=True)
    p.add_argument("--rule", required=True, choices=[r.value for r in fusion.FusionRule])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="compute a metrics report from scores + labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--hter-threshold", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--formats", default="json,det-csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("protocol", help="run a protocol config end to end")
    p.add_argument("--manifest", action="append", required=True)
    p.add_argument("--embeddings", action="append", required=True, metavar="MODEL=PATH")
    p.add_argument("--protocol-config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--formats", default="json,text-table")
    _add_train_opts(p)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("report-det", help="render a DET SVG from det-csv files")
    p.add_argument("--det-csv", action="append", required=True, metavar="[LABEL=]PATH")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report_det)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        for fmt_attr in ("formats",):
            if hasattr(args, fmt_attr):
                for fmt in getattr(args, fmt_attr).split(","):
                    if fmt not in FORMATS:
                        raise ConfigError(f"unknown format {fmt!r}")
        return args.func(args)
    except ConfigError as exc:
        print(f"pad-eval: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"pad-eval: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"pad-eval: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
