"""Model adapters with one common text/image interface.

``HashedProjectionModel`` is the offline default for tests and plumbing: a
keyed hash stream expanded to Gaussian coordinates, deterministic across
platforms, content-sensitive for images. ``ClipModel`` adapts a CLIP-family
checkpoint via ``transformers`` when the weights are available.
"""

from __future__ import annotations

import hashlib
import math
import struct
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from PIL import Image

from .errors import ModelError


@runtime_checkable
class TextImageModel(Protocol):
    model_id: str
    dim: int

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray: ...

    def embed_images(self, images: Sequence[Image.Image]) -> np.ndarray: ...


class HashedProjectionModel:
    """Deterministic stand-in for a joint text/image encoder.

    Same (seed, content) always maps to the same unit vector; texts hash
    their UTF-8 bytes, images hash a 16x16 RGB thumbnail so the vector is
    content-dependent but stable across decoders.
    """

    def __init__(self, seed: int = 0, dim: int = 64):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.seed = int(seed)
        self.dim = int(dim)
        self.model_id = f"hashed:{seed}:{dim}"
        self._key = hashlib.blake2b(
            struct.pack("<q", self.seed), digest_size=16
        ).digest()

    def _vector(self, payload: bytes) -> np.ndarray:
        pairs = (self.dim + 1) // 2
        uniforms: list[float] = []
        counter = 0
        while len(uniforms) < 2 * pairs:
            block = hashlib.blake2b(
                payload + struct.pack("<I", counter), key=self._key, digest_size=64
            ).digest()
            for i in range(0, 64, 8):
                u = int.from_bytes(block[i : i + 8], "little")
                uniforms.append((u + 1) / 2.0**64)
            counter += 1
        coords: list[float] = []
        for i in range(pairs):
            r = math.sqrt(-2.0 * math.log(uniforms[2 * i]))
            theta = 2.0 * math.pi * uniforms[2 * i + 1]
            coords.append(r * math.cos(theta))
            coords.append(r * math.sin(theta))
        vec = np.asarray(coords[: self.dim], dtype=np.float64)
        return (vec / np.linalg.norm(vec)).astype(np.float32)

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self._vector(b"text:" + t.encode("utf-8")) for t in texts])

    def embed_images(self, images: Sequence[Image.Image]) -> np.ndarray:
        if not images:
            return np.zeros((0, self.dim), dtype=np.float32)
        out = []
        for img in images:
            thumb = img.convert("RGB").resize((16, 16), Image.NEAREST)
            out.append(self._vector(b"image:" + thumb.tobytes()))
        return np.stack(out)


class ClipModel:
    """CLIP-family checkpoint adapter (requires torch + transformers)."""

    def __init__(self, checkpoint: str = "openai/clip-vit-base-patch32"):
        try:
            import torch
            from transformers import CLIPModel as HFCLIPModel
            from transformers import CLIPProcessor
        except ImportError as exc:
            raise ModelError(f"clip extras not installed: {exc}") from exc
        try:
            self._torch = torch
            self._model = HFCLIPModel.from_pretrained(checkpoint)
            self._processor = CLIPProcessor.from_pretrained(checkpoint)
        except Exception as exc:
            raise ModelError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
        self._model.eval()
        self.dim = int(self._model.config.projection_dim)
        self.model_id = f"clip:{checkpoint}"

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        torch = self._torch
        with torch.no_grad():
            inputs = self._processor(
                text=list(texts), return_tensors="pt", padding=True, truncation=True
            )
            feats = self._model.get_text_features(**inputs)
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)

    def embed_images(self, images: Sequence[Image.Image]) -> np.ndarray:
        if not images:
            return np.zeros((0, self.dim), dtype=np.float32)
        torch = self._torch
        with torch.no_grad():
            inputs = self._processor(images=list(images), return_tensors="pt")
            feats = self._model.get_image_features(**inputs)
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)


def parse_model_spec(spec: str) -> TextImageModel:
    """Build a model from ``hashed:seed:dim`` or ``clip:checkpoint``."""
    scheme, _, rest = spec.partition(":")
    if scheme == "hashed":
        try:
            seed_s, dim_s = rest.split(":")
            return HashedProjectionModel(int(seed_s), int(dim_s))
        except ValueError:
            raise ValueError(
                f"bad hashed model spec {spec!r}, want hashed:seed:dim"
            ) from None
    if scheme == "clip":
        return ClipModel(rest or "openai/clip-vit-base-patch32")
    raise ValueError(f"unknown model scheme {scheme!r} in {spec!r}")
