"""Writer for the EEF1 embedding table format.

Independent implementation of the engine-side format so exported files are
consumable there bit-exactly: magic ``EEF1``, u32 LE version=1, u32 LE dim,
u32 LE entry count, then per entry a u32 LE label byte length, the UTF-8
label, and dim float32 LE values. Vectors are written unit-normalized.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EEF1"
VERSION = 1


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Unit-normalize each row in float64, return float32."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if not np.all(np.isfinite(m)) or np.any(norms < 1e-12):
        raise ValueError("embeddings must be finite and non-zero")
    return (m / norms).astype(np.float32)


def encode(labels: list[str], vectors: np.ndarray, dim: int) -> bytes:
    if len(labels) != len(vectors):
        raise ValueError("labels and vectors differ in length")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate labels")
    blob = bytearray(struct.pack("<4sIII", MAGIC, VERSION, dim, len(labels)))
    for label, vec in zip(labels, vectors):
        vec = np.asarray(vec, dtype=np.float32)
        if vec.shape != (dim,):
            raise ValueError(f"vector for {label!r} has shape {vec.shape}")
        raw = label.encode("utf-8")
        blob += struct.pack("<I", len(raw))
        blob += raw
        blob += vec.astype("<f4").tobytes()
    return bytes(blob)


def write(path: str | Path, labels: list[str], vectors: np.ndarray, dim: int) -> Path:
    path = Path(path)
    path.write_bytes(encode(labels, vectors, dim))
    return path
