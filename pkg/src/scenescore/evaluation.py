"""Evaluation harness: multi-class metrics, binary ROC/AUC, run deltas.

Manifests are JSON lines, one item per line:

    {"id": "...", "class": "...", "embedding": {"values": [...]}}
    {"id": "...", "class": "...", "embedding": {"file": "x.eef1", "label": "k"}}

An optional first line ``{"classes": [...]}`` declares the class list;
otherwise it is the sorted set of item classes. Reports carry an identity
hash of the resolved manifest so only like-for-like runs can be compared.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .compiler import AnalyticsApp
from .embeddings import Embedding, LabelEmbeddingSet, load_embeddings, normalize
from .errors import (
    DataError,
    DegenerateLabelsError,
    DimensionMismatchError,
    EmptyManifestError,
    FormatError,
    ManifestMismatchError,
)
from .loop import LoopConfig, Reasoner, run_inference
from .providers import EmbeddingProvider

TOP_K = 5


@dataclass(frozen=True)
class ManifestItem:
    item_id: str
    true_class: str
    embedding: Embedding


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestItem, ...]
    classes: tuple[str, ...]
    identity_hash: str = field(default="", compare=False)

    def __post_init__(self):
        ids = [e.item_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise FormatError("duplicate item ids in manifest")
        declared = set(self.classes)
        for e in self.entries:
            if e.true_class not in declared:
                raise FormatError(
                    f"item {e.item_id!r} has undeclared class {e.true_class!r}"
                )
        if not self.identity_hash:
            object.__setattr__(self, "identity_hash", self._hash())

    def _hash(self) -> str:
        h = hashlib.sha256()
        h.update(("\x00".join(self.classes)).encode("utf-8"))
        for e in self.entries:
            h.update(e.item_id.encode("utf-8"))
            h.update(e.true_class.encode("utf-8"))
            h.update(e.embedding.values.tobytes())
        return h.hexdigest()

    def __len__(self) -> int:
        return len(self.entries)


def manifest_from_items(
    items: list[tuple[str, str, Embedding]], classes: list[str] | None = None
) -> DatasetManifest:
    entries = tuple(
        ManifestItem(i, c, normalize(e)) for i, c, e in items
    )
    if classes is None:
        classes = sorted({e.true_class for e in entries})
    return DatasetManifest(entries=entries, classes=tuple(classes))


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse the JSONL manifest; ``file`` embedding refs resolve relative to
    the manifest's directory."""
    path = Path(path)
    base = path.parent
    classes: list[str] | None = None
    items: list[tuple[str, str, Embedding]] = []
    cache: dict[Path, LabelEmbeddingSet] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: bad JSON: {exc}") from exc
        if classes is None and not items and set(doc) == {"classes"}:
            classes = [str(c) for c in doc["classes"]]
            continue
        try:
            item_id = str(doc["id"])
            true_class = str(doc["class"])
            emb_spec = doc["embedding"]
        except KeyError as exc:
            raise FormatError(f"line {lineno}: missing key {exc}") from None
        if "values" in emb_spec:
            emb = normalize(Embedding(emb_spec["values"]))
        elif "file" in emb_spec:
            ref = base / emb_spec["file"]
            if ref not in cache:
                cache[ref] = load_embeddings(ref)
            emb = cache[ref].lookup(emb_spec["label"])
            if emb is None:
                raise FormatError(
                    f"line {lineno}: label {emb_spec['label']!r} not in {ref}"
                )
        else:
            raise FormatError(f"line {lineno}: embedding needs values or file/label")
        items.append((item_id, true_class, emb))
    return manifest_from_items(items, classes)


@dataclass(frozen=True)
class ClassMetrics:
    class_name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    top1_accuracy: float
    top5_accuracy: float
    total_predictions: int
    per_class: tuple[ClassMetrics, ...]
    manifest_hash: str = ""

    SCALARS = (
        "accuracy",
        "macro_precision",
        "macro_recall",
        "macro_f1",
        "micro_precision",
        "micro_recall",
        "micro_f1",
        "top1_accuracy",
        "top5_accuracy",
    )

    def to_dict(self) -> dict:
        doc = {name: getattr(self, name) for name in self.SCALARS}
        doc["total_predictions"] = self.total_predictions
        doc["per_class"] = [
            {
                "class": m.class_name,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }
            for m in self.per_class
        ]
        doc["manifest_hash"] = self.manifest_hash
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(
            **{name: float(doc[name]) for name in cls.SCALARS},
            total_predictions=int(doc["total_predictions"]),
            per_class=tuple(
                ClassMetrics(
                    m["class"],
                    float(m["precision"]),
                    float(m["recall"]),
                    float(m["f1"]),
                    int(m["support"]),
                )
                for m in doc["per_class"]
            ),
            manifest_hash=doc.get("manifest_hash", ""),
        )

    def per_class_csv(self) -> str:
        lines = ["class,precision,recall,f1,support"]
        for m in self.per_class:
            lines.append(
                f"{m.class_name},{m.precision!r},{m.recall!r},{m.f1!r},{m.support}"
            )
        return "\n".join(lines) + "\n"


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def evaluate_multiclass(
    app: AnalyticsApp,
    manifest: DatasetManifest,
    cfg: LoopConfig = LoopConfig(),
    reasoner: Reasoner | None = None,
    provider: EmbeddingProvider | None = None,
) -> MetricsReport:
    """Predict argmax class per item and reduce to a metrics report."""
    if len(manifest) == 0:
        raise EmptyManifestError("manifest has no items")
    if manifest.entries[0].embedding.dim != app.label_embeddings.dim:
        raise DimensionMismatchError(
            f"manifest dim {manifest.entries[0].embedding.dim} "
            f"!= app dim {app.label_embeddings.dim}"
        )
    correct = 0
    top5 = 0
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    support: dict[str, int] = {}
    for item in manifest.entries:
        report = run_inference(app, item.embedding, reasoner, provider, cfg)
        ranked_classes = [c for c, _ in report.class_scores]
        predicted = ranked_classes[0]
        support[item.true_class] = support.get(item.true_class, 0) + 1
        if predicted == item.true_class:
            correct += 1
            tp[predicted] = tp.get(predicted, 0) + 1
        else:
            fp[predicted] = fp.get(predicted, 0) + 1
        if item.true_class in ranked_classes[:TOP_K]:
            top5 += 1
    total = len(manifest)
    per_class = []
    for class_name in manifest.classes:
        c_tp = tp.get(class_name, 0)
        c_fp = fp.get(class_name, 0)
        c_support = support.get(class_name, 0)
        precision = c_tp / (c_tp + c_fp) if c_tp + c_fp else 0.0
        recall = c_tp / c_support if c_support else 0.0
        per_class.append(
            ClassMetrics(class_name, precision, recall, _f1(precision, recall), c_support)
        )
    n_classes = len(per_class)
    accuracy = correct / total
    return MetricsReport(
        accuracy=accuracy,
        macro_precision=sum(m.precision for m in per_class) / n_classes,
        macro_recall=sum(m.recall for m in per_class) / n_classes,
        macro_f1=sum(m.f1 for m in per_class) / n_classes,
        micro_precision=accuracy,
        micro_recall=accuracy,
        micro_f1=accuracy,
        top1_accuracy=accuracy,
        top5_accuracy=top5 / total,
        total_predictions=total,
        per_class=tuple(per_class),
        manifest_hash=manifest.identity_hash,
    )


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]
    auc: float
    manifest_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "points": [[x, y] for x, y in self.points],
            "auc": self.auc,
            "manifest_hash": self.manifest_hash,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RocCurve":
        return cls(
            points=tuple((float(x), float(y)) for x, y in doc["points"]),
            auc=float(doc["auc"]),
            manifest_hash=doc.get("manifest_hash", ""),
        )

    def points_csv(self) -> str:
        lines = ["fpr,tpr"]
        for x, y in self.points:
            lines.append(f"{x!r},{y!r}")
        return "\n".join(lines) + "\n"


def roc_from_scores(
    scores: list[float], is_positive: list[bool], manifest_hash: str = ""
) -> RocCurve:
    """Build the ROC curve by sweeping thresholds over the distinct scores.

    Equal scores move along one diagonal segment together, so identical
    scores for all items give the chance diagonal (AUC 0.5). AUC is the
    trapezoidal integral of the points.
    """
    if len(scores) != len(is_positive):
        raise ValueError("scores and labels differ in length")
    n_pos = sum(is_positive)
    n_neg = len(is_positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("need both positive and negative items")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(order):
        threshold = scores[order[i]]
        while i < len(order) and scores[order[i]] == threshold:
            if is_positive[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_neg, tp / n_pos))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=tuple(points), auc=auc, manifest_hash=manifest_hash)


def evaluate_binary_roc(
    app: AnalyticsApp,
    manifest: DatasetManifest,
    positive_class_set: set[str],
    cfg: LoopConfig = LoopConfig(),
    reasoner: Reasoner | None = None,
    provider: EmbeddingProvider | None = None,
) -> RocCurve:
    """Score items by their best positive-set class score and build the ROC."""
    if len(manifest) == 0:
        raise EmptyManifestError("manifest has no items")
    unknown = positive_class_set - set(app.class_names)
    if unknown:
        raise DataError(f"positive classes not in app: {sorted(unknown)}")
    scores: list[float] = []
    truth: list[bool] = []
    for item in manifest.entries:
        report = run_inference(app, item.embedding, reasoner, provider, cfg)
        by_class = dict(report.class_scores)
        scores.append(max(by_class[c] for c in positive_class_set))
        truth.append(item.true_class in positive_class_set)
    return roc_from_scores(scores, truth, manifest_hash=manifest.identity_hash)


def compare_runs(a, b) -> dict:
    """Signed per-metric deltas (b minus a) between two like reports."""
    if type(a) is not type(b):
        raise ManifestMismatchError(
            f"cannot compare {type(a).__name__} with {type(b).__name__}"
        )
    if a.manifest_hash != b.manifest_hash:
        raise ManifestMismatchError("reports come from different manifests")
    if isinstance(a, RocCurve):
        return {"kind": "roc", "deltas": {"auc": b.auc - a.auc}}
    if isinstance(a, MetricsReport):
        return {
            "kind": "metrics",
            "deltas": {
                name: getattr(b, name) - getattr(a, name)
                for name in MetricsReport.SCALARS
            },
        }
    raise ManifestMismatchError(f"unsupported report type {type(a).__name__}")
