import numpy as np
import pytest

from scenescore import (
    CompileConfig,
    Embedding,
    LabelEmbeddingSet,
    OntologyGraph,
    SyntheticProvider,
    compile_app,
    fixture_ontology_path,
    load_ontology,
    normalize,
)

DANGER_SEEDS = {
    "child_safety": ["child in danger", "unattended child"],
    "fire_hazard": ["fire", "smoke"],
    "poison_risk": ["poisoning", "chemical spill"],
    "theft": ["shoplifting", "burglary"],
    "violence": ["fighting", "assault"],
}


def unit(values) -> Embedding:
    return normalize(Embedding(np.asarray(values, dtype=np.float32)))


def label_set(mapping: dict[str, list[float]]) -> LabelEmbeddingSet:
    entries = tuple((label, unit(vals)) for label, vals in mapping.items())
    dim = entries[0][1].dim
    return LabelEmbeddingSet(dim, entries)


@pytest.fixture(scope="session")
def fixture_graph():
    return load_ontology(fixture_ontology_path())


@pytest.fixture(scope="session")
def provider64():
    return SyntheticProvider(42, 64)


@pytest.fixture(scope="session")
def danger_app(fixture_graph, provider64):
    """Five safety classes compiled over the bundled ontology."""
    return compile_app(DANGER_SEEDS, fixture_graph, provider64)


@pytest.fixture(scope="session")
def seeds_only_app(provider64):
    """Same classes compiled against an empty ontology (no expansion)."""
    return compile_app(DANGER_SEEDS, OntologyGraph([]), provider64)


@pytest.fixture()
def small_app(fixture_graph):
    provider = SyntheticProvider(7, 32)
    cfg = CompileConfig(max_depth=1, max_terms_per_seed=4)
    return compile_app(
        {"fire_hazard": ["fire", "smoke"], "theft": ["shoplifting", "burglary"]},
        fixture_graph,
        provider,
        cfg,
    )
