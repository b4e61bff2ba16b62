"""Embedding vectors, the ordered label table, and the EEF1 file format.

Vectors are stored as float32 and kept unit-normalized so that a plain dot
product downstream equals cosine similarity; all norm checks accumulate in
float64. The binary container is deliberately minimal:

    EEF1 layout (all integers little-endian u32):
        magic   b"EEF1"
        version 1
        dim
        count
        count * ( label_byte_len, label utf-8 bytes, dim * float32 )

A JSON mirror ``{"dim": n, "entries": [{"label": s, "values": [...]}]}`` is
accepted on load for debugging; it goes through the same validation and
re-normalization rules as the binary path.
"""

from __future__ import annotations

import json
import struct
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateLabelError,
    FormatError,
    NonFiniteError,
    NotNormalizedError,
    VersionUnsupportedError,
    ZeroVectorError,
)

MAGIC = b"EEF1"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIII")

# A freshly normalized float32 vector has float64 norm within ~2e-7 of 1;
# 1e-6 is the "already unit, keep bytes" threshold, 1e-5 the set invariant.
UNIT_TOL_STRICT = 1e-6
UNIT_TOL = 1e-5
ZERO_TOL = 1e-12


def canonical_label(label: str) -> str:
    """Unicode NFC plus surrounding-whitespace trim; case is preserved."""
    return unicodedata.normalize("NFC", label).strip()


@dataclass(frozen=True, eq=False)
class Embedding:
    """A fixed-dimension float32 vector, optionally flagged unit-norm."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.ndim != 1 or vals.size < 1:
            raise NonFiniteError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteError("embedding contains NaN or Inf")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.normalized:
            norm = float(np.linalg.norm(vals.astype(np.float64)))
            if abs(norm - 1.0) > UNIT_TOL:
                raise NotNormalizedError(
                    f"flagged normalized but L2 norm is {norm:.8f}"
                )

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return (
            self.normalized == other.normalized
            and self.values.tobytes() == other.values.tobytes()
        )

    def __hash__(self):
        return hash((self.values.tobytes(), self.normalized))

    def __repr__(self):
        return f"Embedding(dim={self.dim}, normalized={self.normalized})"


def normalize(e: Embedding) -> Embedding:
    """Rescale to unit L2 norm.

    Bitwise idempotent: a vector whose float64 norm is already within 1e-6
    of 1 is returned with its bytes untouched, and one division pass always
    lands inside that window.
    """
    vals64 = e.values.astype(np.float64)
    norm = float(np.linalg.norm(vals64))
    if not np.isfinite(norm):
        raise NonFiniteError("embedding contains NaN or Inf")
    if norm < ZERO_TOL:
        raise ZeroVectorError(f"L2 norm {norm:.3e} below {ZERO_TOL:.0e}")
    if abs(norm - 1.0) <= UNIT_TOL_STRICT:
        if e.normalized:
            return e
        return Embedding(e.values, normalized=True)
    return Embedding((vals64 / norm).astype(np.float32), normalized=True)


@dataclass(frozen=True, eq=False)
class LabelEmbeddingSet:
    """Ordered, duplicate-free label -> unit embedding table.

    ``renormalized_count`` records how many vectors had to be re-normalized
    during load (norm off by more than 1e-5); it is metadata and does not
    participate in equality.
    """

    dim: int
    entries: tuple[tuple[str, Embedding], ...]
    renormalized_count: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise FormatError(f"dim must be >= 1, got {self.dim}")
        seen: set[str] = set()
        canon_entries = []
        for label, emb in self.entries:
            label = canonical_label(label)
            if not label:
                raise FormatError("empty label")
            if label in seen:
                raise DuplicateLabelError(f"duplicate label {label!r}")
            seen.add(label)
            if emb.dim != self.dim:
                raise FormatError(
                    f"label {label!r} has dim {emb.dim}, set dim is {self.dim}"
                )
            if not emb.normalized:
                raise FormatError(f"label {label!r} embedding is not normalized")
            canon_entries.append((label, emb))
        object.__setattr__(self, "entries", tuple(canon_entries))
        object.__setattr__(self, "_index", {l: e for l, e in canon_entries})

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelEmbeddingSet):
            return NotImplemented
        return self.dim == other.dim and self.entries == other.entries

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.entries)

    def matrix(self) -> np.ndarray:
        """(n, dim) float32 matrix in entry order."""
        if not self.entries:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([e.values for _, e in self.entries])

    def lookup(self, label: str) -> Embedding | None:
        """Exact match after canonicalization; None when absent."""
        return self._index.get(canonical_label(label))


def lookup(s: LabelEmbeddingSet, label: str) -> Embedding | None:
    return s.lookup(label)


def _recheck(label: str, vals: np.ndarray) -> tuple[Embedding, bool]:
    """Validate one raw vector on load; renormalize when off by > 1e-5."""
    if not np.all(np.isfinite(vals)):
        raise FormatError(f"label {label!r}: non-finite values")
    norm = float(np.linalg.norm(vals.astype(np.float64)))
    if norm < ZERO_TOL:
        raise FormatError(f"label {label!r}: zero vector")
    if abs(norm - 1.0) > UNIT_TOL:
        return normalize(Embedding(vals)), True
    return Embedding(vals, normalized=True), False


def dumps_embeddings(s: LabelEmbeddingSet) -> bytes:
    """Encode to EEF1 bytes; identical sets produce identical bytes."""
    blob = bytearray(HEADER.pack(MAGIC, FORMAT_VERSION, s.dim, len(s.entries)))
    for label, emb in s.entries:
        raw = label.encode("utf-8")
        blob += struct.pack("<I", len(raw))
        blob += raw
        blob += emb.values.astype("<f4").tobytes()
    return bytes(blob)


def save_embeddings(s: LabelEmbeddingSet, path: str | Path) -> Path:
    """Write the EEF1 binary form; identical sets produce identical bytes."""
    path = Path(path)
    path.write_bytes(dumps_embeddings(s))
    return path


def loads_embeddings(data: bytes) -> LabelEmbeddingSet:
    """Decode EEF1 bytes (or the JSON mirror, sniffed by magic bytes)."""
    if data[:4] == MAGIC:
        return _parse_eef1(data)
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"neither EEF1 magic nor valid JSON: {exc}") from exc
    return _parse_json_mirror(doc)


def load_embeddings(path: str | Path) -> LabelEmbeddingSet:
    """Read an EEF1 file (or its JSON mirror)."""
    return loads_embeddings(Path(path).read_bytes())


def _parse_eef1(data: bytes) -> LabelEmbeddingSet:
    if len(data) < HEADER.size:
        raise FormatError("truncated header")
    magic, version, dim, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionUnsupportedError(f"unsupported EEF1 version {version}")
    if dim < 1:
        raise FormatError(f"dim must be >= 1, got {dim}")
    offset = HEADER.size
    vec_bytes = dim * 4
    entries = []
    warnings = 0
    for i in range(count):
        if offset + 4 > len(data):
            raise FormatError(f"truncated at entry {i}: missing label length")
        (label_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + label_len + vec_bytes > len(data):
            raise FormatError(f"truncated at entry {i}")
        try:
            label = data[offset : offset + label_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"entry {i}: label is not UTF-8") from exc
        offset += label_len
        vals = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(
            np.float32
        )
        offset += vec_bytes
        emb, renormed = _recheck(label, vals)
        warnings += int(renormed)
        entries.append((label, emb))
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last entry")
    try:
        return LabelEmbeddingSet(dim, tuple(entries), renormalized_count=warnings)
    except DuplicateLabelError:
        raise FormatError("duplicate label in file") from None


def _parse_json_mirror(doc) -> LabelEmbeddingSet:
    if not isinstance(doc, dict) or "dim" not in doc or "entries" not in doc:
        raise FormatError('JSON mirror must be {"dim": n, "entries": [...]}')
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise FormatError(f"bad dim {dim!r}")
    entries = []
    warnings = 0
    for i, item in enumerate(doc["entries"]):
        if not isinstance(item, dict) or "label" not in item or "values" not in item:
            raise FormatError(f"entry {i}: expected label/values object")
        vals = np.asarray(item["values"], dtype=np.float32)
        if vals.ndim != 1 or vals.size != dim:
            raise FormatError(f"entry {i}: expected {dim} values")
        emb, renormed = _recheck(str(item["label"]), vals)
        warnings += int(renormed)
        entries.append((str(item["label"]), emb))
    try:
        return LabelEmbeddingSet(dim, tuple(entries), renormalized_count=warnings)
    except DuplicateLabelError:
        raise FormatError("duplicate label in file") from None
