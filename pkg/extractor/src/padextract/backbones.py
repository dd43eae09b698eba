"""Frozen image encoders.

Three families:
  clip:<variant>     CLIP vision towers loaded lazily via transformers
  dino:<variant>     DINOv2 encoders loaded lazily via transformers
  generic:<variant>  deterministic seeded random-projection encoder; needs
                     no weights and is bitwise-reproducible across runs,
                     so tests and offline smoke runs use it

All encoders expose `.dim` and `.embed(crops) -> (n, dim) float32`,
run inference-only and never mutate weights.
"""

import hashlib
import re
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import BackboneLoadError, ConfigError

FAMILIES = ("clip", "dino", "generic")

_HF_NAMES = {
    ("clip", "ViT-B-16"): "openai/clip-vit-base-patch16",
    ("clip", "ViT-B-32"): "openai/clip-vit-base-patch32",
    ("clip", "ViT-L-14"): "openai/clip-vit-large-patch14",
    ("dino", "base"): "facebook/dinov2-base",
    ("dino", "small"): "facebook/dinov2-small",
    ("dino", "large"): "facebook/dinov2-large",
}


@dataclass(frozen=True)
class BackboneId:
    family: str
    variant: str
    weights_source: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown backbone family {self.family!r}; expected one of {FAMILIES}"
            )
        if not self.variant:
            raise ConfigError("backbone variant must be non-empty")

    @classmethod
    def parse(cls, spec):
        """Parse 'family:variant' or 'family:variant:weights_source'."""
        parts = spec.split(":", 2)
        if len(parts) < 2:
            raise ConfigError(f"backbone spec {spec!r} must look like family:variant")
        return cls(parts[0], parts[1], parts[2] if len(parts) == 3 else "")

    def __str__(self):
        return f"{self.family}:{self.variant}"


class GenericEncoder:
    """Seeded random projection of downscaled grayscale pixels.

    The projection matrix is derived from the variant name alone, so the
    same variant always produces the same weights and therefore identical
    vectors for identical crops, in any process.
    """

    def __init__(self, backbone):
        match = re.search(r"(\d+)$", backbone.variant)
        self.dim = int(match.group(1)) if match else 64
        if self.dim < 1:
            raise ConfigError(f"generic backbone dim must be >= 1: {backbone.variant!r}")
        seed = int.from_bytes(
            hashlib.sha256(backbone.variant.encode()).digest()[:8], "big"
        )
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal((self.dim, 32 * 32))

    def embed(self, crops):
        vectors = np.empty((len(crops), self.dim), dtype=np.float32)
        for i, crop in enumerate(crops):
            gray = crop if crop.ndim == 2 else cv2.cvtColor(crop, cv2.COLOR_BGR2GRAY)
            small = cv2.resize(gray, (32, 32), interpolation=cv2.INTER_AREA)
            x = small.astype(np.float64).ravel() / 255.0
            v = self._projection @ x
            norm = np.linalg.norm(v)
            if norm > 0:
                v = v / norm
            vectors[i] = v.astype(np.float32)
        return vectors


class HFEncoder:
    """transformers-backed frozen encoder (CLIP vision tower or DINOv2)."""

    def __init__(self, backbone):
        name = backbone.weights_source or _HF_NAMES.get(
            (backbone.family, backbone.variant)
        )
        if name is None:
            raise BackboneLoadError(
                str(backbone), "no known weights source; pass family:variant:source"
            )
        try:
            import torch
            from transformers import AutoImageProcessor, AutoModel
        except ImportError as exc:
            raise BackboneLoadError(str(backbone), f"missing dependency: {exc}")
        try:
            self._processor = AutoImageProcessor.from_pretrained(name)
            model = AutoModel.from_pretrained(name)
        except Exception as exc:  # loading can fail in many library-specific ways
            raise BackboneLoadError(str(backbone), str(exc))
        if backbone.family == "clip":
            model = model.vision_model
        model.eval()
        for param in model.parameters():
            param.requires_grad_(False)
        self._torch = torch
        self._model = model
        self.dim = int(model.config.hidden_size)

    def embed(self, crops):
        rgb = [cv2.cvtColor(c, cv2.COLOR_BGR2RGB) if c.ndim == 3 else c for c in crops]
        inputs = self._processor(images=rgb, return_tensors="pt")
        with self._torch.inference_mode():
            out = self._model(**inputs)
        # CLS token embedding
        return out.last_hidden_state[:, 0, :].numpy().astype(np.float32)


def load_encoder(backbone):
    if backbone.family == "generic":
        return GenericEncoder(backbone)
    return HFEncoder(backbone)
