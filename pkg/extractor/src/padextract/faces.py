"""Face localisation and cropping.

Detection is backend-pluggable because OpenCV builds differ: older builds
bundle the Haar frontal-face cascade, OpenCV >= 5 removed it and instead
offers FaceDetectorYN (YuNet), which needs an external ONNX model file.
Resolution order: an explicitly supplied YuNet model path, then the bundled
Haar cascade if present, then a model path from the PAD_EXTRACT_FACE_MODEL
environment variable. Pre-cropped inputs bypass detection entirely.

Frames with no detection raise NoFaceDetected so callers can skip and log
them.
"""

import os

import cv2
import numpy as np

from .errors import ConfigError, NoFaceDetected

CROP_SIZE = 256
FACE_MODEL_ENV = "PAD_EXTRACT_FACE_MODEL"

_detectors = {}


class _HaarDetector:
    def __init__(self, cascade):
        self._cascade = cascade

    def boxes(self, frame):
        gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY) if frame.ndim == 3 else frame
        found = self._cascade.detectMultiScale(gray, scaleFactor=1.1, minNeighbors=4)
        return [tuple(int(v) for v in box) for box in found]


class _YuNetDetector:
    def __init__(self, model_path):
        if not os.path.exists(model_path):
            raise ConfigError(f"face detector model not found: {model_path}")
        self._net = cv2.FaceDetectorYN_create(model_path, "", (0, 0))

    def boxes(self, frame):
        if frame.ndim == 2:
            frame = cv2.cvtColor(frame, cv2.COLOR_GRAY2BGR)
        height, width = frame.shape[:2]
        self._net.setInputSize((width, height))
        _, faces = self._net.detect(frame)
        if faces is None:
            return []
        return [tuple(int(v) for v in face[:4]) for face in faces]


def _bundled_haar():
    if not hasattr(cv2, "CascadeClassifier"):
        return None
    path = os.path.join(cv2.data.haarcascades, "haarcascade_frontalface_default.xml")
    if not os.path.exists(path):
        return None
    cascade = cv2.CascadeClassifier(path)
    return None if cascade.empty() else _HaarDetector(cascade)


def _resolve_detector(model_path=None):
    key = model_path or ""
    if key not in _detectors:
        if model_path:
            detector = _YuNetDetector(model_path)
        else:
            detector = _bundled_haar()
            env_model = os.environ.get(FACE_MODEL_ENV)
            if detector is None and env_model:
                detector = _YuNetDetector(env_model)
        if detector is None:
            raise ConfigError(
                "no face detector available: this OpenCV build has no Haar "
                "cascade; pass --face-model or set "
                f"{FACE_MODEL_ENV} to a YuNet ONNX model, or use --pre-cropped"
            )
        _detectors[key] = detector
    return _detectors[key]


def _resize(image, size):
    return cv2.resize(image, (size, size), interpolation=cv2.INTER_AREA)


def detect_and_crop(frame, frame_id="<frame>", size=CROP_SIZE, model_path=None):
    """Crop the largest detected face and resize it to size x size."""
    boxes = _resolve_detector(model_path).boxes(frame)
    if not boxes:
        raise NoFaceDetected(frame_id)
    x, y, w, h = max(boxes, key=lambda b: b[2] * b[3])
    x, y = max(x, 0), max(y, 0)
    return _resize(frame[y : y + h, x : x + w], size)


def passthrough_crop(frame, size=CROP_SIZE):
    """Resize an already-cropped face image without running detection."""
    return _resize(frame, size)


def augment_brightness(crop, rng, low=0.7, high=1.3):
    """Randomly scale brightness; returns the same dtype as the input."""
    factor = rng.uniform(low, high)
    out = np.clip(crop.astype(np.float64) * factor, 0, 255)
    return out.astype(np.uint8)
