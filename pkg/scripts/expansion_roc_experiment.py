#!/usr/bin/env python3
"""Measure how semantic expansion changes binary separability.

Builds synthetic scenes as unit mixtures 0.8*seed + 0.2*neighbor-term over
the bundled ontology, then compares ROC/AUC of two compiled apps on the same
manifest: one compiled from seeds alone, one with full expansion. Positives
mix a danger seed with one of its positive expansion terms; hard negatives
mix the same seed with one of its antonym (negative-evidence) terms, so the
seed direction alone cannot tell them apart.

Usage: python scripts/expansion_roc_experiment.py [--dim 64] [--seed 42]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from scenescore import (  # noqa: E402
    Embedding,
    LoopConfig,
    OntologyGraph,
    SyntheticProvider,
    compare_runs,
    compile_app,
    evaluate_binary_roc,
    fixture_ontology_path,
    load_ontology,
    manifest_from_items,
    normalize,
)
from scenescore.ontology import Polarity  # noqa: E402

CLASSES = {
    "child_safety": ["child in danger", "unattended child"],
    "fire_hazard": ["fire", "smoke"],
    "poison_risk": ["poisoning", "chemical spill"],
    "theft": ["shoplifting", "burglary"],
    "violence": ["fighting", "assault"],
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--temperature", type=float, default=1.0)
    parser.add_argument("--neighbors-per-seed", type=int, default=2)
    args = parser.parse_args()

    graph = load_ontology(fixture_ontology_path())
    provider = SyntheticProvider(args.seed, args.dim)
    app_with = compile_app(CLASSES, graph, provider)
    app_without = compile_app(CLASSES, OntologyGraph([]), provider)

    def mixture(seed_label, term_label):
        a = provider.embed_text(seed_label).values.astype(np.float64)
        b = provider.embed_text(term_label).values.astype(np.float64)
        return normalize(Embedding((0.8 * a + 0.2 * b).astype(np.float32)))

    items = []
    for class_name, terms in app_with.expansion:
        by_seed: dict[str, list] = {}
        for t in terms:
            if t.depth >= 1 and t.polarity in (
                Polarity.POSITIVE,
                Polarity.DISCRIMINATIVE,
            ):
                by_seed.setdefault(t.source_seed, []).append(t)
        for seed, ts in sorted(by_seed.items()):
            ts.sort(key=lambda t: (t.depth, -t.weight, t.term))
            for t in ts[: args.neighbors_per_seed]:
                items.append(
                    (f"pos {class_name} {seed} {t.term}", class_name,
                     mixture(seed, t.term))
                )
        for t in sorted(
            (t for t in terms if t.polarity is Polarity.NEGATIVE),
            key=lambda t: t.term,
        ):
            items.append(
                (f"neg {t.source_seed} {t.term}", "normal",
                 mixture(t.source_seed, t.term))
            )

    manifest = manifest_from_items(items, sorted(CLASSES) + ["normal"])
    cfg = LoopConfig(temperature=args.temperature)
    without = evaluate_binary_roc(app_without, manifest, set(CLASSES), cfg)
    with_exp = evaluate_binary_roc(app_with, manifest, set(CLASSES), cfg)

    print(
        json.dumps(
            {
                "items": len(manifest),
                "positives": sum(
                    1 for e in manifest.entries if e.true_class != "normal"
                ),
                "auc_without_expansion": without.auc,
                "auc_with_expansion": with_exp.auc,
                "comparison": compare_runs(without, with_exp),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
