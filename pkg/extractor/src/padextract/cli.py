"""Command-line extraction pipeline.

Expects a directory whose children name the classes: `bona_fide` plus any
number of `attack_<species>` directories. Each entry inside a class
directory is one video — either a video file readable by OpenCV or a
directory of frame images (sorted by filename).

    pad-extract --videos DIR --backbone generic:proj64 --frames 25 \
        --out-manifest manifest.jsonl --out-embeddings emb.pade
"""

import argparse
import logging
import os
import sys

import cv2
import numpy as np

from .backbones import BackboneId, load_encoder
from .errors import ConfigError, DataError, EmptyVideo, NoFaceDetected
from .export import ExtractRecord, write_embeddings, write_manifest
from .faces import augment_brightness, detect_and_crop, passthrough_crop
from .frames import plan_frames

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".ppm"}

log = logging.getLogger("padextract")


def discover_videos(root):
    """Yield (video_id, label, species, path) for every video under root."""
    if not os.path.isdir(root):
        raise ConfigError(f"video directory not found: {root}")
    videos = []
    for class_name in sorted(os.listdir(root)):
        class_dir = os.path.join(root, class_name)
        if not os.path.isdir(class_dir):
            continue
        if class_name == "bona_fide":
            label, species = "bona_fide", ""
        elif class_name.startswith("attack_"):
            label, species = "attack", class_name[len("attack_"):]
        else:
            raise ConfigError(
                f"unexpected class directory {class_name!r}; "
                "expected bona_fide or attack_<species>"
            )
        for entry in sorted(os.listdir(class_dir)):
            videos.append((entry, label, species, os.path.join(class_dir, entry)))
    if not videos:
        raise DataError(f"no videos found under {root}")
    return videos


def _frame_files(video_dir):
    return sorted(
        os.path.join(video_dir, name)
        for name in os.listdir(video_dir)
        if os.path.splitext(name)[1].lower() in IMAGE_EXTENSIONS
    )


def read_planned_frames(path, target_frames):
    """Return (plan, frames) for a video file or a directory of images."""
    video_id = os.path.basename(path)
    if os.path.isdir(path):
        files = _frame_files(path)
        if not files:
            raise EmptyVideo(video_id)
        plan = plan_frames(len(files), target_frames)
        frames = []
        for i in plan.indices:
            frame = cv2.imread(files[i], cv2.IMREAD_COLOR)
            if frame is None:
                raise DataError(f"cannot decode frame image {files[i]}")
            frames.append(frame)
        return plan, frames
    capture = cv2.VideoCapture(path)
    if not capture.isOpened():
        raise DataError(f"cannot open video {path}")
    try:
        total = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
        if total < 1:
            raise EmptyVideo(video_id)
        plan = plan_frames(total, target_frames)
        wanted = set(plan.indices)
        frames = []
        for index in range(max(wanted) + 1):
            ok, frame = capture.read()
            if not ok:
                raise DataError(f"failed reading frame {index} of {path}")
            if index in wanted:
                frames.append(frame)
        return plan, frames
    finally:
        capture.release()


def extract(args):
    backbone = BackboneId.parse(args.backbone)
    encoder = load_encoder(backbone)
    rng = np.random.default_rng(args.seed)
    records = []
    sample_ids = []
    crops = []
    for video_id, label, species, path in discover_videos(args.videos):
        plan, frames = read_planned_frames(path, args.frames)
        for frame_index, frame in zip(plan.indices, frames):
            frame_id = f"{video_id}[{frame_index}]"
            if args.pre_cropped:
                crop = passthrough_crop(frame)
            else:
                try:
                    crop = detect_and_crop(frame, frame_id, model_path=args.face_model)
                except NoFaceDetected:
                    log.warning("no face detected in %s; frame skipped", frame_id)
                    continue
            variants = [(f"{video_id}_f{frame_index:05d}", crop, False)]
            for copy in range(args.augment_copies):
                variants.append((
                    f"{video_id}_f{frame_index:05d}#aug{copy}",
                    augment_brightness(crop, rng),
                    True,
                ))
            for sample_id, image, augmented in variants:
                records.append(ExtractRecord(
                    sample_id=sample_id,
                    video_id=video_id,
                    frame_index=frame_index,
                    dataset_id=args.dataset_id,
                    label=label,
                    pai_species=species,
                    split=args.split,
                    augmented=augmented,
                ))
                sample_ids.append(sample_id)
                crops.append(image)
    if not records:
        raise DataError("no usable frames extracted")
    vectors = encoder.embed(crops)
    write_manifest(records, args.out_manifest)
    write_embeddings(sample_ids, vectors, args.out_embeddings)
    log.info(
        "wrote %d samples from %d videos (dim %d)",
        len(records), len({r.video_id for r in records}), encoder.dim,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pad-extract",
        description="Sample frames, crop faces and export frozen-encoder embeddings.",
    )
    parser.add_argument("--videos", required=True, help="root directory of class dirs")
    parser.add_argument("--backbone", required=True,
                        help="family:variant[:weights], e.g. clip:ViT-L-14")
    parser.add_argument("--frames", type=int, default=25,
                        help="target frames sampled evenly per video")
    parser.add_argument("--out-manifest", required=True)
    parser.add_argument("--out-embeddings", required=True)
    parser.add_argument("--pre-cropped", action="store_true",
                        help="inputs are already face crops; skip detection")
    parser.add_argument("--face-model", default=None,
                        help="YuNet ONNX model path for OpenCV builds "
                             "without the bundled Haar cascade")
    parser.add_argument("--augment-copies", type=int, default=0,
                        help="extra brightness-augmented variants per frame")
    parser.add_argument("--dataset-id", default="default")
    parser.add_argument("--split", default="unassigned",
                        choices=["train", "dev", "test", "unassigned"])
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if args.frames < 1 or args.augment_copies < 0:
        print("error: --frames must be >= 1 and --augment-copies >= 0",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        extract(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
