"""Prior-knowledge graph: TSV ingestion and weighted breadth-first expansion.

The file format is one edge per line, ``source<TAB>relation<TAB>target<TAB>weight``,
UTF-8, ``#`` comments, weight optional (default 1.0) and constrained to (0, 1].
Duplicate triples collapse keeping the maximum weight.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .embeddings import canonical_label
from .errors import FormatError, UnknownTermError


class Relation(enum.Enum):
    SYNONYM = "synonym"
    HYPERNYM = "hypernym"
    HYPONYM = "hyponym"
    RELATED = "related"
    ANTONYM = "antonym"
    PART_OF = "part_of"

    @classmethod
    def parse(cls, name: str) -> "Relation":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(r.value for r in cls)
            raise FormatError(f"unknown relation {name!r} (valid: {valid})") from None


class Polarity(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    DISCRIMINATIVE = "discriminative"


@dataclass(frozen=True)
class ExpansionTerm:
    """One term derived from a seed, with evidence polarity and path weight."""

    term: str
    polarity: Polarity
    source_seed: str
    depth: int
    weight: float

    def __post_init__(self):
        if (self.depth == 0) != (self.term == self.source_seed):
            raise ValueError("depth 0 exactly when term equals its seed")
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"weight must be in (0, 1], got {self.weight}")

    def to_dict(self) -> dict:
        return {
            "term": self.term,
            "polarity": self.polarity.value,
            "source_seed": self.source_seed,
            "depth": self.depth,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExpansionTerm":
        return cls(
            term=doc["term"],
            polarity=Polarity(doc["polarity"]),
            source_seed=doc["source_seed"],
            depth=int(doc["depth"]),
            weight=float(doc["weight"]),
        )


class OntologyGraph:
    """Immutable term graph with typed, weighted edges."""

    def __init__(self, edges: list[tuple[str, Relation, str, float]]):
        triples: dict[tuple[str, Relation, str], float] = {}
        nodes: set[str] = set()
        for source, relation, target, weight in edges:
            source = canonical_label(source)
            target = canonical_label(target)
            if not source or not target:
                raise FormatError("empty term in edge")
            if source == target:
                raise FormatError(f"self-loop edge on {source!r}")
            if not (0.0 < weight <= 1.0):
                raise FormatError(f"weight out of (0, 1]: {weight}")
            key = (source, relation, target)
            prev = triples.get(key)
            triples[key] = weight if prev is None else max(prev, weight)
            nodes.add(source)
            nodes.add(target)
        self._nodes = frozenset(nodes)
        # adjacency sorted by (relation name, target) for deterministic BFS
        adj: dict[str, list[tuple[Relation, str, float]]] = {}
        for (source, relation, target), weight in triples.items():
            adj.setdefault(source, []).append((relation, target, weight))
        for source in adj:
            adj[source].sort(key=lambda e: (e[0].value, e[1]))
        self._adj = adj
        self._n_edges = len(triples)

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    @property
    def edge_count(self) -> int:
        return self._n_edges

    def __contains__(self, term: str) -> bool:
        return canonical_label(term) in self._nodes

    def edges(self):
        """All (source, relation, target, weight) triples, sorted."""
        out = []
        for source in sorted(self._adj):
            for relation, target, weight in self._adj[source]:
                out.append((source, relation, target, weight))
        return out

    def outgoing(self, term: str) -> list[tuple[Relation, str, float]]:
        return list(self._adj.get(canonical_label(term), ()))


def load_ontology(path: str | Path) -> OntologyGraph:
    """Parse the TSV edge list described in the module docstring."""
    edges = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise FormatError(f"line {lineno}: expected 3 or 4 tab-separated fields")
        source, relation_name, target = (f.strip() for f in fields[:3])
        relation = Relation.parse(relation_name)
        weight = 1.0
        if len(fields) == 4:
            try:
                weight = float(fields[3])
            except ValueError:
                raise FormatError(f"line {lineno}: bad weight {fields[3]!r}") from None
        if not (0.0 < weight <= 1.0):
            raise FormatError(f"line {lineno}: weight out of (0, 1]: {weight}")
        if not canonical_label(source) or not canonical_label(target):
            raise FormatError(f"line {lineno}: empty term")
        if canonical_label(source) == canonical_label(target):
            raise FormatError(f"line {lineno}: self-loop edge on {source!r}")
        edges.append((source, relation, target, weight))
    return OntologyGraph(edges)


def neighbors(
    g: OntologyGraph,
    term: str,
    relations: set[Relation],
    max_depth: int,
    max_terms: int,
    polarity: Polarity = Polarity.POSITIVE,
) -> list[ExpansionTerm]:
    """BFS over the given relations from term.

    Each reached term is reported once, at its minimum depth, with weight
    equal to the product of edge weights along the first shortest path in
    BFS order (frontier expanded in (relation, target) lexicographic order).
    Output is sorted by (depth asc, weight desc, term asc) and truncated to
    ``max_terms``. The origin itself is never reported.
    """
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    if max_terms < 0:
        raise ValueError(f"max_terms must be >= 0, got {max_terms}")
    origin = canonical_label(term)
    if origin not in g.nodes:
        raise UnknownTermError(f"term {origin!r} not in graph")
    reached: dict[str, tuple[int, float]] = {}
    queue: deque[tuple[str, int, float]] = deque([(origin, 0, 1.0)])
    visited = {origin}
    while queue:
        current, depth, weight = queue.popleft()
        if depth == max_depth:
            continue
        for relation, target, edge_weight in g.outgoing(current):
            if relation not in relations or target in visited:
                continue
            visited.add(target)
            reached[target] = (depth + 1, weight * edge_weight)
            queue.append((target, depth + 1, weight * edge_weight))
    terms = [
        ExpansionTerm(t, polarity, origin, depth, weight)
        for t, (depth, weight) in reached.items()
    ]
    terms.sort(key=lambda e: (e.depth, -e.weight, e.term))
    return terms[:max_terms]
