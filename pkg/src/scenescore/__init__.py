"""Zero-shot analytics over joint-embedding vectors.

Compile seed keywords into an expanded, evidence-tagged label package,
score image embeddings against it via softmax affinity (globally and per
grid cell), iterate with a pluggable reasoner, and evaluate multi-class
and binary performance.
"""

from .affinity import (
    AffinityResult,
    GridAffinityMap,
    GridEmbeddingBundle,
    bundle_from_label_set,
    compute_affinity,
    compute_grid_affinities,
    heatmap,
    rank,
    softmax,
)
from .compiler import (
    AnalyticsApp,
    CompileConfig,
    compile_app,
    export_ontology_tsv,
    load_app,
    save_app,
    semantic_expand,
)
from .embeddings import (
    Embedding,
    LabelEmbeddingSet,
    canonical_label,
    load_embeddings,
    lookup,
    normalize,
    save_embeddings,
)
from .evaluation import (
    DatasetManifest,
    MetricsReport,
    RocCurve,
    compare_runs,
    evaluate_binary_roc,
    evaluate_multiclass,
    load_manifest,
    manifest_from_items,
    roc_from_scores,
)
from .loop import (
    InferenceReport,
    LoopConfig,
    Reasoner,
    check_convergence,
    classify,
    ontology_walk_reasoner,
    remote_reasoner,
    run_inference,
)
from .ontology import (
    ExpansionTerm,
    OntologyGraph,
    Polarity,
    Relation,
    load_ontology,
    neighbors,
)
from .providers import (
    EmbeddingProvider,
    FileProvider,
    HttpProvider,
    SyntheticProvider,
    parse_provider_spec,
)

__version__ = "0.1.0"


def fixture_ontology_path():
    """Path of the bundled safety/retail demo ontology."""
    from importlib.resources import files

    return files("scenescore").joinpath("data/fixture_ontology.tsv")
