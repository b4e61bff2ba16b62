"""Compile phase: seed keywords -> expanded, evidence-tagged label package.

``semantic_expand`` grows each class's seeds over the ontology and tags
every derived term as positive, negative, or discriminative evidence.
``compile_app`` embeds all terms through a provider and assembles the
portable app package, persisted in the flat EAP1 container:

    EAP1 layout:
        magic   b"EAP1"
        u32 LE  version (1)
        u32 LE  manifest byte length
        manifest (canonical JSON, UTF-8: classes, expansion, config,
                  provenance)
        EEF1 block with one entry per label

Compilation is a pure function of (seeds, ontology, provider id+stream,
config): repeated runs produce byte-identical packages.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embeddings import (
    Embedding,
    LabelEmbeddingSet,
    canonical_label,
    dumps_embeddings,
    loads_embeddings,
    normalize,
)
from .errors import (
    EmptyInputError,
    FormatError,
    ProviderError,
    VersionUnsupportedError,
)
from .ontology import (
    ExpansionTerm,
    OntologyGraph,
    Polarity,
    Relation,
    neighbors,
)
from .providers import EmbeddingProvider

APP_MAGIC = b"EAP1"
APP_VERSION = 1

DEFAULT_POSITIVE_RELATIONS = frozenset(
    {Relation.SYNONYM, Relation.HYPONYM, Relation.RELATED}
)
DEFAULT_NEGATIVE_RELATIONS = frozenset({Relation.ANTONYM})

# negative evidence is expanded one hop only, applied directly to seeds
NEGATIVE_DEPTH = 1


@dataclass(frozen=True)
class CompileConfig:
    relations_positive: frozenset[Relation] = DEFAULT_POSITIVE_RELATIONS
    relations_negative: frozenset[Relation] = DEFAULT_NEGATIVE_RELATIONS
    max_depth: int = 2
    max_terms_per_seed: int = 32
    temperature: float = 1.0
    grid: tuple[int, int] | None = None
    reasoner_endpoint: str | None = None

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.max_terms_per_seed < 1:
            raise ValueError(
                f"max_terms_per_seed must be >= 1, got {self.max_terms_per_seed}"
            )

    def to_dict(self) -> dict:
        return {
            "relations_positive": sorted(r.value for r in self.relations_positive),
            "relations_negative": sorted(r.value for r in self.relations_negative),
            "max_depth": self.max_depth,
            "max_terms_per_seed": self.max_terms_per_seed,
            "temperature": self.temperature,
            "grid": list(self.grid) if self.grid else None,
            "reasoner_endpoint": self.reasoner_endpoint,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CompileConfig":
        return cls(
            relations_positive=frozenset(
                Relation(r) for r in doc["relations_positive"]
            ),
            relations_negative=frozenset(
                Relation(r) for r in doc["relations_negative"]
            ),
            max_depth=int(doc["max_depth"]),
            max_terms_per_seed=int(doc["max_terms_per_seed"]),
            temperature=float(doc["temperature"]),
            grid=tuple(doc["grid"]) if doc.get("grid") else None,
            reasoner_endpoint=doc.get("reasoner_endpoint"),
        )


@dataclass(frozen=True)
class AnalyticsApp:
    """Compiled analytics package: classes, tagged expansion, embeddings."""

    version: int
    classes: tuple[tuple[str, tuple[str, ...]], ...]
    expansion: tuple[tuple[str, tuple[ExpansionTerm, ...]], ...]
    label_embeddings: LabelEmbeddingSet
    config: CompileConfig
    provenance: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self):
        class_seeds = dict(self.classes)
        expansion_classes = [c for c, _ in self.expansion]
        if set(expansion_classes) != set(class_seeds):
            raise FormatError("expansion classes do not match declared classes")
        if len(expansion_classes) != len(set(expansion_classes)):
            raise FormatError("duplicate class in expansion")
        all_terms: set[str] = set()
        for class_name, terms in self.expansion:
            seeds = set(class_seeds[class_name])
            seen: set[str] = set()
            for t in terms:
                if t.term in seen:
                    raise FormatError(
                        f"term {t.term!r} tagged twice for class {class_name!r}"
                    )
                seen.add(t.term)
                if t.source_seed not in seeds:
                    raise FormatError(
                        f"term {t.term!r} sourced from {t.source_seed!r}, "
                        f"not a seed of class {class_name!r}"
                    )
                all_terms.add(t.term)
            missing = seeds - seen
            if missing:
                raise FormatError(
                    f"class {class_name!r} is missing seed terms {sorted(missing)}"
                )
        if set(self.label_embeddings.labels) != all_terms:
            raise FormatError("label embeddings do not cover the expansion exactly")

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.classes)

    def terms_of(self, class_name: str) -> tuple[ExpansionTerm, ...]:
        for c, terms in self.expansion:
            if c == class_name:
                return terms
        raise KeyError(class_name)

    def polarity_map(self) -> dict[str, dict[str, Polarity]]:
        """class -> label -> polarity."""
        return {
            c: {t.term: t.polarity for t in terms} for c, terms in self.expansion
        }


def _canon_seeds(
    seeds_by_class: Mapping[str, Sequence[str]],
) -> list[tuple[str, tuple[str, ...]]]:
    if not seeds_by_class:
        raise EmptyInputError("no classes given")
    out = []
    for class_name, seeds in seeds_by_class.items():
        class_name = canonical_label(class_name)
        if not class_name:
            raise EmptyInputError("empty class name")
        canon: list[str] = []
        for seed in seeds:
            seed = canonical_label(seed)
            if not seed:
                raise EmptyInputError(f"empty seed in class {class_name!r}")
            if seed not in canon:
                canon.append(seed)
        if not canon:
            raise EmptyInputError(f"class {class_name!r} has no seeds")
        out.append((class_name, tuple(canon)))
    if len({c for c, _ in out}) != len(out):
        raise EmptyInputError("duplicate class name")
    return out


def _prefer(a: ExpansionTerm, b: ExpansionTerm) -> ExpansionTerm:
    """Deterministic winner when one term is derived twice for a class.

    Closest derivation wins; ties prefer positive polarity, then the
    alphabetically smallest seed.
    """
    polarity_rank = {Polarity.POSITIVE: 0, Polarity.NEGATIVE: 1}

    def key(t: ExpansionTerm):
        return (t.depth, -t.weight, polarity_rank.get(t.polarity, 2), t.source_seed)

    return min(a, b, key=key)


def semantic_expand(
    seeds_by_class: Mapping[str, Sequence[str]],
    g: OntologyGraph,
    cfg: CompileConfig = CompileConfig(),
) -> dict[str, list[ExpansionTerm]]:
    """Expand every class's seeds into tagged evidence terms.

    Per seed: the seed itself (depth 0, positive), positive-relation
    neighbors up to ``max_depth``, negative-relation neighbors one hop out.
    A non-seed positive term reached from two or more classes is reassigned
    discriminative polarity for every class that reached it. Seeds absent
    from the ontology expand to just themselves.
    """
    classes = _canon_seeds(seeds_by_class)
    per_class: dict[str, dict[str, ExpansionTerm]] = {}
    for class_name, seeds in classes:
        terms: dict[str, ExpansionTerm] = {
            seed: ExpansionTerm(seed, Polarity.POSITIVE, seed, 0, 1.0)
            for seed in seeds
        }
        for seed in seeds:
            if seed not in g:
                continue
            derived = neighbors(
                g,
                seed,
                set(cfg.relations_positive),
                cfg.max_depth,
                cfg.max_terms_per_seed,
            )
            derived += neighbors(
                g,
                seed,
                set(cfg.relations_negative),
                NEGATIVE_DEPTH,
                cfg.max_terms_per_seed,
                polarity=Polarity.NEGATIVE,
            )
            for t in derived:
                existing = terms.get(t.term)
                if existing is None:
                    terms[t.term] = t
                elif existing.depth > 0:
                    terms[t.term] = _prefer(existing, t)
        per_class[class_name] = terms

    reached_by: dict[str, set[str]] = {}
    for class_name, terms in per_class.items():
        for t in terms.values():
            if t.polarity is Polarity.POSITIVE:
                reached_by.setdefault(t.term, set()).add(class_name)

    out: dict[str, list[ExpansionTerm]] = {}
    for class_name, terms in per_class.items():
        final = []
        for t in terms.values():
            if (
                t.polarity is Polarity.POSITIVE
                and t.depth > 0
                and len(reached_by.get(t.term, ())) >= 2
            ):
                t = ExpansionTerm(
                    t.term, Polarity.DISCRIMINATIVE, t.source_seed, t.depth, t.weight
                )
            final.append(t)
        final.sort(key=lambda t: (t.depth, -t.weight, t.term))
        out[class_name] = final
    return out


def embed_label(provider: EmbeddingProvider, label: str) -> Embedding:
    """Embed one label; underscore labels average the verbatim and
    space-separated renderings (the verbatim label stays the key)."""
    try:
        emb = provider.embed_text(label)
        if "_" in label:
            spaced = provider.embed_text(label.replace("_", " "))
            mean = emb.values.astype(np.float64) + spaced.values.astype(np.float64)
            emb = Embedding((mean / 2.0).astype(np.float32))
        return normalize(emb)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"embedding {label!r} failed: {exc}", label=label) from exc


def compile_app(
    seeds_by_class: Mapping[str, Sequence[str]],
    g: OntologyGraph,
    provider: EmbeddingProvider,
    cfg: CompileConfig = CompileConfig(),
    provenance: Mapping[str, str] | None = None,
) -> AnalyticsApp:
    """Run expansion, embed every label once, assemble the app package."""
    expansion = semantic_expand(seeds_by_class, g, cfg)
    classes = _canon_seeds(seeds_by_class)
    labels = sorted({t.term for terms in expansion.values() for t in terms})
    embedded = [(label, embed_label(provider, label)) for label in labels]
    dim = embedded[0][1].dim
    label_embeddings = LabelEmbeddingSet(dim, tuple(embedded))
    prov = {"provider": provider.id}
    if provenance:
        prov.update(provenance)
    return AnalyticsApp(
        version=APP_VERSION,
        classes=tuple(classes),
        expansion=tuple((c, tuple(expansion[c])) for c, _ in classes),
        label_embeddings=label_embeddings,
        config=cfg,
        provenance=tuple(sorted(prov.items())),
    )


def _manifest_dict(app: AnalyticsApp) -> dict:
    return {
        "classes": [{"name": c, "seeds": list(seeds)} for c, seeds in app.classes],
        "expansion": {
            c: [t.to_dict() for t in terms] for c, terms in app.expansion
        },
        "config": app.config.to_dict(),
        "provenance": dict(app.provenance),
    }


def app_to_bytes(app: AnalyticsApp) -> bytes:
    manifest = json.dumps(
        _manifest_dict(app), ensure_ascii=False, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    return (
        APP_MAGIC
        + struct.pack("<II", app.version, len(manifest))
        + manifest
        + dumps_embeddings(app.label_embeddings)
    )


def app_from_bytes(data: bytes) -> AnalyticsApp:
    if data[:4] != APP_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}")
    if len(data) < 12:
        raise FormatError("truncated header")
    version, manifest_len = struct.unpack_from("<II", data, 4)
    if version != APP_VERSION:
        raise VersionUnsupportedError(f"unsupported app version {version}")
    if len(data) < 12 + manifest_len:
        raise FormatError("truncated manifest")
    try:
        manifest = json.loads(data[12 : 12 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad manifest JSON: {exc}") from exc
    label_embeddings = loads_embeddings(data[12 + manifest_len :])
    try:
        classes = tuple(
            (c["name"], tuple(c["seeds"])) for c in manifest["classes"]
        )
        expansion = tuple(
            (c, tuple(ExpansionTerm.from_dict(t) for t in manifest["expansion"][c]))
            for c, _ in classes
        )
        config = CompileConfig.from_dict(manifest["config"])
        provenance = tuple(sorted(manifest.get("provenance", {}).items()))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad manifest structure: {exc}") from exc
    return AnalyticsApp(
        version=version,
        classes=classes,
        expansion=expansion,
        label_embeddings=label_embeddings,
        config=config,
        provenance=provenance,
    )


def save_app(app: AnalyticsApp, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(app_to_bytes(app))
    return path


def load_app(path: str | Path) -> AnalyticsApp:
    return app_from_bytes(Path(path).read_bytes())


def export_ontology_tsv(app: AnalyticsApp) -> str:
    """Re-export the expansion graph as an ingestible TSV edge list.

    Depth>=1 derivations become seed->term edges: antonym for negative
    evidence, related otherwise; duplicate edges keep the maximum weight.
    """
    edges: dict[tuple[str, str, str], float] = {}
    for _, terms in app.expansion:
        for t in terms:
            if t.depth == 0:
                continue
            relation = (
                Relation.ANTONYM.value
                if t.polarity is Polarity.NEGATIVE
                else Relation.RELATED.value
            )
            key = (t.source_seed, relation, t.term)
            edges[key] = max(edges.get(key, 0.0), t.weight)
    lines = [
        f"{source}\t{relation}\t{target}\t{weight!r}"
        for (source, relation, target), weight in sorted(edges.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")
