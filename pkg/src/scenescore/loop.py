"""Iterative inference: score, optionally ask a reasoner for better labels,
re-score, and stop on top-X convergence or the cycle cap.

With reasoning disabled the loop degenerates to a single affinity
computation. With reasoning enabled, each extra cycle asks the reasoner for
new labels given the current top-X ranking, embeds any genuinely new ones,
and recomputes affinities over the grown label set; the known-label set only
ever grows. Class scores aggregate evidence polarity:

    score(c) = max(0, pos(c) + disc_w * disc(c) - neg_w * neg(c))

where pos/neg/disc are the best affinity among the class's labels of that
polarity (0 when it has none).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import requests

from .affinity import AffinityResult, compute_affinity
from .compiler import AnalyticsApp, CompileConfig, embed_label
from .embeddings import Embedding, LabelEmbeddingSet, canonical_label
from .errors import (
    ConfigError,
    DimensionMismatchError,
    ProviderError,
    ReasonerError,
    UnknownLabelInAffinityError,
)
from .ontology import OntologyGraph, Polarity, neighbors
from .providers import EmbeddingProvider


@dataclass(frozen=True)
class LoopConfig:
    max_cycles: int = 10
    top_x: int = 5
    convergence_jaccard: float = 1.0
    temperature: float = 1.0
    reasoning_enabled: bool = False
    discriminative_weight: float = 0.5
    negative_weight: float = 0.5

    def __post_init__(self):
        if self.max_cycles < 1:
            raise ValueError(f"max_cycles must be >= 1, got {self.max_cycles}")
        if self.top_x < 1:
            raise ValueError(f"top_x must be >= 1, got {self.top_x}")
        if not (0.0 < self.convergence_jaccard <= 1.0):
            raise ValueError(
                f"convergence_jaccard must be in (0, 1], got {self.convergence_jaccard}"
            )


@runtime_checkable
class Reasoner(Protocol):
    def propose(
        self,
        context: str,
        ranked: Sequence[tuple[str, float]],
        known_labels: set[str],
    ) -> list[str]: ...


@dataclass(frozen=True)
class CycleRecord:
    labels_added: tuple[str, ...]
    affinity: AffinityResult


@dataclass(frozen=True)
class InferenceReport:
    cycles_run: int
    converged: bool
    per_cycle: tuple[CycleRecord, ...]
    final_affinity: AffinityResult
    class_scores: tuple[tuple[str, float], ...]

    def to_dict(self, top: int | None = None) -> dict:
        def view(result: AffinityResult) -> dict:
            doc = result.to_dict()
            if top is not None:
                doc["entries"] = doc["entries"][:top]
            return doc

        return {
            "cycles_run": self.cycles_run,
            "converged": self.converged,
            "per_cycle": [
                {"labels_added": list(c.labels_added), "affinity": view(c.affinity)}
                for c in self.per_cycle
            ],
            "final_affinity": view(self.final_affinity),
            "class_scores": [
                {"class": c, "score": s} for c, s in self.class_scores
            ],
        }

    def to_json(self, top: int | None = None, indent: int | None = 2) -> str:
        return json.dumps(
            self.to_dict(top), ensure_ascii=False, indent=indent, sort_keys=True
        )


def check_convergence(
    prev_top: Sequence[str], curr_top: Sequence[str], cfg: LoopConfig
) -> bool:
    """Jaccard similarity of the two top-X label sets against the threshold.

    Two empty sets have Jaccard 1 (a stable nothing is converged).
    """
    a, b = set(prev_top), set(curr_top)
    union = a | b
    jaccard = 1.0 if not union else len(a & b) / len(union)
    return jaccard >= cfg.convergence_jaccard


def _scores_by_label(affinity: AffinityResult) -> dict[str, float]:
    return dict(affinity.entries)


def _classify_scores(
    polarity_by_class: dict[str, dict[str, Polarity]],
    affinity: AffinityResult,
    discriminative_weight: float,
    negative_weight: float,
) -> tuple[tuple[str, float], ...]:
    scores = _scores_by_label(affinity)
    out = []
    for class_name, label_polarity in polarity_by_class.items():
        best = {p: 0.0 for p in Polarity}
        for label, polarity in label_polarity.items():
            score = scores.get(label)
            if score is not None and score > best[polarity]:
                best[polarity] = score
        value = (
            best[Polarity.POSITIVE]
            + discriminative_weight * best[Polarity.DISCRIMINATIVE]
            - negative_weight * best[Polarity.NEGATIVE]
        )
        out.append((class_name, max(0.0, value)))
    out.sort(key=lambda cs: (-cs[1], cs[0]))
    return tuple(out)


def classify(
    app: AnalyticsApp,
    affinity: AffinityResult,
    discriminative_weight: float = 0.5,
    negative_weight: float = 0.5,
) -> list[tuple[str, float]]:
    """Map label affinities back to per-class evidence scores.

    Scores are not renormalized; ties sort by class name.
    """
    known = set(app.label_embeddings.labels)
    unknown = [l for l in affinity.labels if l not in known]
    if unknown:
        raise UnknownLabelInAffinityError(
            f"affinity labels not in app: {sorted(unknown)[:5]}"
        )
    return list(
        _classify_scores(
            app.polarity_map(), affinity, discriminative_weight, negative_weight
        )
    )


def _attribution_map(app: AnalyticsApp) -> dict[str, str]:
    """label -> owning class; labels shared across classes go to the
    alphabetically smallest one."""
    owner: dict[str, str] = {}
    for class_name in sorted(app.class_names):
        for t in app.terms_of(class_name):
            owner.setdefault(t.term, class_name)
    return owner


def run_inference(
    app: AnalyticsApp,
    v: Embedding,
    reasoner: Reasoner | None = None,
    provider: EmbeddingProvider | None = None,
    cfg: LoopConfig = LoopConfig(),
) -> InferenceReport:
    """Run the (optionally iterative) inference loop for one embedding."""
    if v.dim != app.label_embeddings.dim:
        raise DimensionMismatchError(
            f"embedding dim {v.dim} != app dim {app.label_embeddings.dim}"
        )
    if cfg.reasoning_enabled and (reasoner is None or provider is None):
        raise ConfigError("reasoning_enabled requires both a reasoner and a provider")

    polarity_by_class = app.polarity_map()
    owner = _attribution_map(app)
    label_set = app.label_embeddings
    context = ", ".join(app.class_names)

    affinity = compute_affinity(v, label_set, cfg.temperature)
    per_cycle: list[CycleRecord] = [CycleRecord((), affinity)]

    def finish(converged: bool) -> InferenceReport:
        return InferenceReport(
            cycles_run=len(per_cycle),
            converged=converged,
            per_cycle=tuple(per_cycle),
            final_affinity=per_cycle[-1].affinity,
            class_scores=_classify_scores(
                polarity_by_class,
                per_cycle[-1].affinity,
                cfg.discriminative_weight,
                cfg.negative_weight,
            ),
        )

    if not cfg.reasoning_enabled:
        return finish(True)

    prev_top = [l for l, _ in affinity.entries[: cfg.top_x]]
    converged = False
    while len(per_cycle) < cfg.max_cycles and not converged:
        ranked = list(per_cycle[-1].affinity.entries[: cfg.top_x])
        known = set(label_set.labels)
        try:
            proposals = reasoner.propose(context, ranked, known)
            added: list[str] = []
            for raw in proposals:
                label = canonical_label(str(raw))
                if not label or label in known:
                    continue
                known.add(label)
                added.append(label)
            if added:
                entries = list(label_set.entries)
                top1_class = owner.get(ranked[0][0]) if ranked else None
                for label in added:
                    emb = embed_label(provider, label)
                    entries.append((label, emb))
                    class_name = top1_class or sorted(app.class_names)[0]
                    polarity_by_class[class_name][label] = Polarity.POSITIVE
                    owner.setdefault(label, class_name)
                label_set = LabelEmbeddingSet(label_set.dim, tuple(entries))
            affinity = compute_affinity(v, label_set, cfg.temperature)
        except (ReasonerError, ProviderError) as exc:
            exc.partial_report = finish(False)
            raise
        per_cycle.append(CycleRecord(tuple(added), affinity))
        curr_top = [l for l, _ in affinity.entries[: cfg.top_x]]
        converged = check_convergence(prev_top, curr_top, cfg)
        prev_top = curr_top
    return finish(converged)


class OntologyWalkReasoner:
    """Deterministic reasoner stub: proposes the ontology's depth-1
    positive-relation neighbors of the current top-1 label."""

    def __init__(self, g: OntologyGraph, cfg: CompileConfig = CompileConfig()):
        self._g = g
        self._cfg = cfg

    def propose(
        self,
        context: str,
        ranked: Sequence[tuple[str, float]],
        known_labels: set[str],
    ) -> list[str]:
        if not ranked:
            return []
        top1 = canonical_label(ranked[0][0])
        if top1 not in self._g:
            return []
        found = neighbors(
            self._g,
            top1,
            set(self._cfg.relations_positive),
            max_depth=1,
            max_terms=len(self._g.nodes),
        )
        fresh = sorted(t.term for t in found if t.term not in known_labels)
        return fresh[: self._cfg.max_terms_per_seed]


def ontology_walk_reasoner(
    g: OntologyGraph, cfg: CompileConfig = CompileConfig()
) -> OntologyWalkReasoner:
    return OntologyWalkReasoner(g, cfg)


class RemoteReasoner:
    """Reasoner over the JSON wire protocol.

    POST {"context", "ranked": [{"label", "score"}...], "known": [...]}
    to the endpoint; expects {"proposals": [...]} back. Malformed responses
    raise, they never degrade to silent empties.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def propose(
        self,
        context: str,
        ranked: Sequence[tuple[str, float]],
        known_labels: set[str],
    ) -> list[str]:
        payload = {
            "context": context,
            "ranked": [{"label": l, "score": s} for l, s in ranked],
            "known": sorted(known_labels),
        }
        try:
            resp = requests.post(self.endpoint, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ReasonerError(f"reasoner request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ReasonerError(f"reasoner returned HTTP {resp.status_code}")
        try:
            doc = resp.json()
            proposals = doc["proposals"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ReasonerError(f"malformed reasoner response: {exc}") from exc
        if not isinstance(proposals, list) or not all(
            isinstance(p, str) for p in proposals
        ):
            raise ReasonerError("reasoner proposals must be a list of strings")
        return proposals


def remote_reasoner(endpoint: str, timeout: float = 10.0) -> RemoteReasoner:
    return RemoteReasoner(endpoint, timeout)
