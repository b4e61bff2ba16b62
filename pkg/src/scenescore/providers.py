"""Embedding providers: the pluggable boundary to real joint-embedding models.

The engine itself never touches pixels or model weights; it asks a provider
for a unit vector per label. Three implementations live here:

* ``SyntheticProvider`` — keyed hash stream, fully deterministic, the test
  double for a real text encoder.
* ``FileProvider`` — serves vectors precomputed into an EEF1 file (the
  CPU-only deployment path).
* ``HttpProvider`` — speaks the remote contract
  ``POST /embed {"kind": "text", "input": s} -> {"dim": n, "values": [...]}``.
"""

from __future__ import annotations

import hashlib
import math
import struct
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
import requests

from .embeddings import Embedding, LabelEmbeddingSet, load_embeddings, normalize
from .errors import ProviderError


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Deterministic text (and optionally image) embedder."""

    dim: int
    id: str

    def embed_text(self, label: str) -> Embedding: ...


class SyntheticProvider:
    """Unit vectors from a keyed pseudo-random stream of (seed, label bytes).

    The stream is derived from blake2b in counter mode and expanded to
    Gaussian coordinates via Box-Muller, so outputs are reproducible across
    platforms and library versions. Identical (seed, label) pairs map to
    identical vectors; distinct labels collide only with hash probability.
    """

    def __init__(self, seed: int, dim: int):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.seed = int(seed)
        self.dim = int(dim)
        self.id = f"synthetic:{seed}:{dim}"
        self._key = hashlib.blake2b(
            struct.pack("<q", self.seed), digest_size=16
        ).digest()

    def _uniforms(self, label: str, count: int) -> list[float]:
        out: list[float] = []
        counter = 0
        data = label.encode("utf-8")
        while len(out) < count:
            block = hashlib.blake2b(
                data + struct.pack("<I", counter), key=self._key, digest_size=64
            ).digest()
            for i in range(0, 64, 8):
                u = int.from_bytes(block[i : i + 8], "little")
                # map to (0, 1]; never 0 so log() below is safe
                out.append((u + 1) / 2.0**64)
            counter += 1
        return out[:count]

    def embed_text(self, label: str) -> Embedding:
        pairs = (self.dim + 1) // 2
        u = self._uniforms(label, 2 * pairs)
        coords: list[float] = []
        for i in range(pairs):
            r = math.sqrt(-2.0 * math.log(u[2 * i]))
            theta = 2.0 * math.pi * u[2 * i + 1]
            coords.append(r * math.cos(theta))
            coords.append(r * math.sin(theta))
        vec = np.asarray(coords[: self.dim], dtype=np.float32)
        return normalize(Embedding(vec))


class FileProvider:
    """Serves labels precomputed into an EEF1 (or JSON mirror) file."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._set: LabelEmbeddingSet = load_embeddings(self._path)
        self.dim = self._set.dim
        self.id = f"file:{self._path.name}"

    def embed_text(self, label: str) -> Embedding:
        emb = self._set.lookup(label)
        if emb is None:
            raise ProviderError(
                f"label {label!r} not present in {self._path}", label=label
            )
        return emb


class HttpProvider:
    """Remote provider speaking the /embed JSON contract."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.id = f"http:{self.url}"
        self._dim: int | None = None

    @property
    def dim(self) -> int:
        if self._dim is None:
            raise ProviderError("dim unknown until the first embed call succeeds")
        return self._dim

    def embed_text(self, label: str) -> Embedding:
        return self._embed({"kind": "text", "input": label}, label)

    def embed_image(self, image_b64: str) -> Embedding:
        return self._embed({"kind": "image", "input": image_b64}, "<image>")

    def _embed(self, payload: dict, label: str) -> Embedding:
        try:
            resp = requests.post(
                f"{self.url}/embed", json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ProviderError(
                f"embed request for {label!r} failed: {exc}", label=label
            ) from exc
        if resp.status_code != 200:
            raise ProviderError(
                f"embed request for {label!r} returned HTTP {resp.status_code}",
                label=label,
            )
        try:
            doc = resp.json()
            dim = int(doc["dim"])
            values = np.asarray(doc["values"], dtype=np.float32)
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(
                f"malformed embed response for {label!r}: {exc}", label=label
            ) from exc
        if values.ndim != 1 or values.size != dim:
            raise ProviderError(
                f"embed response for {label!r}: {values.size} values, dim says {dim}",
                label=label,
            )
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise ProviderError(
                f"provider changed dim from {self._dim} to {dim}", label=label
            )
        return normalize(Embedding(values))


def parse_provider_spec(spec: str) -> EmbeddingProvider:
    """Build a provider from ``synthetic:seed:dim``, ``file:path`` or ``http:url``."""
    scheme, _, rest = spec.partition(":")
    if scheme == "synthetic":
        try:
            seed_s, dim_s = rest.split(":")
            return SyntheticProvider(int(seed_s), int(dim_s))
        except ValueError:
            raise ValueError(
                f"bad synthetic provider spec {spec!r}, want synthetic:seed:dim"
            ) from None
    if scheme == "file":
        return FileProvider(rest)
    if scheme == "http" or scheme == "https":
        return HttpProvider(spec)
    raise ValueError(f"unknown provider scheme {scheme!r} in {spec!r}")
