"""Softmax affinity scoring: per-image label distributions, ranking, grids.

Logits are ``temperature * dot(v, label_i)`` accumulated in float64 over
unit vectors, so the dot product is cosine similarity. The softmax is
stabilized by max subtraction, which leaves results unchanged (shift
invariance) while preventing overflow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embeddings import Embedding, LabelEmbeddingSet
from .errors import (
    DimensionMismatchError,
    EmptyLabelSetError,
    FormatError,
    InvalidTemperatureError,
    NotNormalizedError,
    UnknownLabelError,
)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stabilized softmax in float64."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True)
class AffinityResult:
    """Label scores sorted by score descending, ties by label ascending.

    The container itself only enforces ordering; distributions produced by
    ``compute_affinity`` additionally sum to 1 (see ``validate``), but
    truncated or hand-built score lists are representable too.
    """

    entries: tuple[tuple[str, float], ...]
    temperature: float = 1.0

    def __post_init__(self):
        ordered = tuple(
            sorted(self.entries, key=lambda kv: (-kv[1], kv[0]))
        )
        object.__setattr__(self, "entries", ordered)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.entries)

    def score_of(self, label: str) -> float:
        for l, s in self.entries:
            if l == label:
                return s
        raise UnknownLabelError(f"label {label!r} not in result")

    def top(self, k: int) -> list[tuple[str, float]]:
        return rank(self, k)

    def validate(self, tol: float = 1e-6) -> None:
        """Assert full distribution invariants (scores in (0,1], sum 1)."""
        total = 0.0
        for label, score in self.entries:
            if not (0.0 < score <= 1.0):
                raise ValueError(f"score for {label!r} outside (0, 1]: {score}")
            total += score
        if abs(total - 1.0) > tol:
            raise ValueError(f"scores sum to {total}, not 1 +/- {tol}")

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "entries": [{"label": l, "score": s} for l, s in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "AffinityResult":
        return cls(
            entries=tuple((e["label"], float(e["score"])) for e in doc["entries"]),
            temperature=float(doc.get("temperature", 1.0)),
        )


def compute_affinity(
    v: Embedding, labels: LabelEmbeddingSet, temperature: float = 1.0
) -> AffinityResult:
    """Softmax of temperature-scaled cosine similarities of v to each label."""
    if not (np.isfinite(temperature) and temperature > 0):
        raise InvalidTemperatureError(f"temperature must be finite > 0: {temperature}")
    if len(labels) == 0:
        raise EmptyLabelSetError("cannot score against an empty label set")
    if v.dim != labels.dim:
        raise DimensionMismatchError(f"embedding dim {v.dim} != label dim {labels.dim}")
    if not v.normalized:
        raise NotNormalizedError("query embedding must be unit-normalized")
    logits = temperature * (
        labels.matrix().astype(np.float64) @ v.values.astype(np.float64)
    )
    scores = softmax(logits)
    entries = tuple(zip(labels.labels, (float(s) for s in scores)))
    return AffinityResult(entries=entries, temperature=float(temperature))


def rank(result: AffinityResult, k: int) -> list[tuple[str, float]]:
    """First min(k, n) entries of the sorted result."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return list(result.entries[:k])


@dataclass(frozen=True)
class GridEmbeddingBundle:
    """Row-major grid of cell embeddings plus an optional whole-image one."""

    rows: int
    cols: int
    cells: tuple[Embedding, ...]
    global_embedding: Embedding | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise FormatError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if len(self.cells) != self.rows * self.cols:
            raise FormatError(
                f"expected {self.rows * self.cols} cells, got {len(self.cells)}"
            )
        dims = {e.dim for e in self.cells}
        if self.global_embedding is not None:
            dims.add(self.global_embedding.dim)
        if len(dims) != 1:
            raise DimensionMismatchError(f"mixed dims in bundle: {sorted(dims)}")
        for e in self.cells:
            if not e.normalized:
                raise NotNormalizedError("bundle cells must be unit-normalized")
        if self.global_embedding is not None and not self.global_embedding.normalized:
            raise NotNormalizedError("global embedding must be unit-normalized")

    @property
    def dim(self) -> int:
        return self.cells[0].dim

    def cell(self, r: int, c: int) -> Embedding:
        return self.cells[r * self.cols + c]


GRID_CELL_PREFIX = "cell_"
GRID_GLOBAL_LABEL = "global"


def bundle_from_label_set(s: LabelEmbeddingSet) -> GridEmbeddingBundle:
    """Interpret an EEF1 set with reserved labels cell_r_c / global as a grid."""
    cells: dict[tuple[int, int], Embedding] = {}
    global_emb = None
    for label, emb in s.entries:
        if label == GRID_GLOBAL_LABEL:
            global_emb = emb
            continue
        if not label.startswith(GRID_CELL_PREFIX):
            raise FormatError(f"unexpected label {label!r} in grid bundle")
        parts = label[len(GRID_CELL_PREFIX) :].split("_")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise FormatError(f"bad grid cell label {label!r}")
        cells[(int(parts[0]), int(parts[1]))] = emb
    if not cells:
        raise FormatError("grid bundle has no cell_r_c entries")
    rows = max(r for r, _ in cells) + 1
    cols = max(c for _, c in cells) + 1
    ordered = []
    for r in range(rows):
        for c in range(cols):
            if (r, c) not in cells:
                raise FormatError(f"grid bundle missing cell_{r}_{c}")
            ordered.append(cells[(r, c)])
    return GridEmbeddingBundle(rows, cols, tuple(ordered), global_emb)


@dataclass(frozen=True)
class GridAffinityMap:
    rows: int
    cols: int
    cell_results: tuple[AffinityResult, ...]
    global_result: AffinityResult | None = None

    def cell(self, r: int, c: int) -> AffinityResult:
        return self.cell_results[r * self.cols + c]


def compute_grid_affinities(
    bundle: GridEmbeddingBundle,
    labels: LabelEmbeddingSet,
    temperature: float = 1.0,
) -> GridAffinityMap:
    """Score every cell (and the global embedding, if any) independently."""
    cell_results = tuple(
        compute_affinity(cell, labels, temperature) for cell in bundle.cells
    )
    global_result = None
    if bundle.global_embedding is not None:
        global_result = compute_affinity(bundle.global_embedding, labels, temperature)
    return GridAffinityMap(bundle.rows, bundle.cols, cell_results, global_result)


def heatmap(grid: GridAffinityMap, label: str) -> np.ndarray:
    """(rows, cols) float64 matrix of one label's per-cell scores."""
    out = np.zeros((grid.rows, grid.cols), dtype=np.float64)
    for r in range(grid.rows):
        for c in range(grid.cols):
            result = grid.cell(r, c)
            try:
                out[r, c] = result.score_of(label)
            except UnknownLabelError:
                raise UnknownLabelError(
                    f"label {label!r} missing from cell ({r}, {c})"
                ) from None
    return out


def heatmap_to_dict(grid: GridAffinityMap, label: str) -> dict:
    values = heatmap(grid, label)
    return {
        "label": label,
        "rows": grid.rows,
        "cols": grid.cols,
        "values": [[float(x) for x in row] for row in values],
    }


def heatmap_to_csv(grid: GridAffinityMap, label: str) -> str:
    """One CSV line per grid row."""
    values = heatmap(grid, label)
    return "\n".join(",".join(repr(float(x)) for x in row) for row in values) + "\n"
