import numpy as np
import pytest

from scenescore import (
    CompileConfig,
    OntologyGraph,
    Relation,
    SyntheticProvider,
    compile_app,
    export_ontology_tsv,
    load_app,
    save_app,
    semantic_expand,
)
from scenescore.compiler import app_from_bytes, app_to_bytes, embed_label
from scenescore.embeddings import Embedding, normalize
from scenescore.errors import (
    EmptyInputError,
    FormatError,
    ProviderError,
    VersionUnsupportedError,
)
from scenescore.ontology import Polarity

EMPTY = OntologyGraph([])


def edge(s, r, t, w=1.0):
    return (s, Relation(r), t, w)


class TestSemanticExpand:
    def test_seed_only_with_empty_ontology(self):
        out = semantic_expand({"c": ["fire"]}, EMPTY)
        assert list(out) == ["c"]
        (term,) = out["c"]
        assert (term.term, term.polarity, term.depth, term.weight) == (
            "fire",
            Polarity.POSITIVE,
            0,
            1.0,
        )

    def test_related_neighbor_included(self):
        g = OntologyGraph([edge("fire", "related", "smoke", 0.9)])
        out = semantic_expand({"c": ["fire"]}, g)
        by_term = {t.term: t for t in out["c"]}
        assert by_term["smoke"].polarity is Polarity.POSITIVE
        assert by_term["smoke"].depth == 1
        assert by_term["smoke"].weight == pytest.approx(0.9)

    def test_antonym_tagged_negative(self):
        g = OntologyGraph([edge("fire", "antonym", "fire safety", 0.8)])
        out = semantic_expand({"c": ["fire"]}, g)
        by_term = {t.term: t for t in out["c"]}
        assert by_term["fire safety"].polarity is Polarity.NEGATIVE

    def test_negative_expansion_is_one_hop(self):
        g = OntologyGraph(
            [
                edge("fire", "antonym", "safety", 0.8),
                edge("safety", "antonym", "hazard", 0.8),
                edge("safety", "related", "drill", 0.8),
            ]
        )
        out = semantic_expand({"c": ["fire"]}, g)
        terms = {t.term for t in out["c"]}
        assert "safety" in terms
        assert "hazard" not in terms and "drill" not in terms

    def test_shared_term_reassigned_discriminative(self):
        g = OntologyGraph(
            [
                edge("shopping", "related", "store", 0.6),
                edge("shoplifting", "related", "store", 0.6),
            ]
        )
        out = semantic_expand({"A": ["shopping"], "B": ["shoplifting"]}, g)
        store_a = {t.term: t for t in out["A"]}["store"]
        store_b = {t.term: t for t in out["B"]}["store"]
        assert store_a.polarity is Polarity.DISCRIMINATIVE
        assert store_b.polarity is Polarity.DISCRIMINATIVE

    def test_seeds_exempt_from_reassignment(self):
        g = OntologyGraph([edge("shoplifting", "related", "store", 0.6)])
        out = semantic_expand({"A": ["store"], "B": ["shoplifting"]}, g)
        store_a = {t.term: t for t in out["A"]}["store"]
        store_b = {t.term: t for t in out["B"]}["store"]
        assert store_a.polarity is Polarity.POSITIVE  # the seed keeps its tag
        assert store_b.polarity is Polarity.DISCRIMINATIVE

    def test_unknown_seed_expands_to_itself(self):
        g = OntologyGraph([edge("a", "related", "b")])
        out = semantic_expand({"c": ["not in graph"]}, g)
        assert [t.term for t in out["c"]] == ["not in graph"]

    def test_empty_inputs_rejected(self):
        with pytest.raises(EmptyInputError):
            semantic_expand({}, EMPTY)
        with pytest.raises(EmptyInputError):
            semantic_expand({"c": []}, EMPTY)
        with pytest.raises(EmptyInputError):
            semantic_expand({"c": ["  "]}, EMPTY)

    def test_per_seed_cap(self):
        g = OntologyGraph([edge("s", "related", f"t{i}", 0.5) for i in range(10)])
        cfg = CompileConfig(max_terms_per_seed=3)
        out = semantic_expand({"c": ["s"]}, g, cfg)
        assert len(out["c"]) == 1 + 3

    def test_size_bound(self, fixture_graph):
        cfg = CompileConfig(max_depth=3, max_terms_per_seed=8)
        seeds = {"c": ["fire", "smoke", "shoplifting"]}
        out = semantic_expand(seeds, fixture_graph, cfg)
        assert len(out["c"]) <= 3 * (1 + 8 * 2)

    def test_deterministic_order(self, fixture_graph):
        seeds = {"c": ["fire", "smoke"], "d": ["shoplifting"]}
        a = semantic_expand(seeds, fixture_graph)
        b = semantic_expand(seeds, fixture_graph)
        assert a == b


class TestSyntheticProvider:
    def test_same_input_same_vector(self):
        p = SyntheticProvider(1, 8)
        a = p.embed_text("fire")
        b = p.embed_text("fire")
        assert a == b

    def test_distinct_labels_distinct_vectors(self):
        p = SyntheticProvider(1, 8)
        assert p.embed_text("a") != p.embed_text("b")

    def test_distinct_seeds_distinct_vectors(self):
        assert SyntheticProvider(1, 8).embed_text("a") != SyntheticProvider(
            2, 8
        ).embed_text("a")

    def test_unit_norm(self):
        p = SyntheticProvider(3, 37)
        for label in ("x", "y", "fire hazard", "炎"):
            norm = float(np.linalg.norm(p.embed_text(label).values.astype(np.float64)))
            assert abs(norm - 1.0) <= 1e-6

    def test_dim_two_minimum(self):
        with pytest.raises(ValueError):
            SyntheticProvider(1, 1)


class FailingProvider:
    """Delegates to a synthetic provider but refuses one label."""

    def __init__(self, bad_label):
        self._inner = SyntheticProvider(1, 8)
        self._bad = bad_label
        self.dim = 8
        self.id = "failing:1:8"

    def embed_text(self, label):
        if label == self._bad:
            raise ProviderError(f"cannot embed {label!r}", label=label)
        return self._inner.embed_text(label)


class TestCompileApp:
    def test_minimal_app(self):
        provider = SyntheticProvider(5, 16)
        app = compile_app({"c": ["fire"]}, EMPTY, provider)
        assert len(app.label_embeddings) == 1
        assert app.label_embeddings.dim == 16
        assert app.label_embeddings.lookup("fire") is not None

    def test_compile_deterministic_bytes(self, fixture_graph):
        provider = SyntheticProvider(5, 16)
        seeds = {"c": ["fire", "smoke"], "d": ["shoplifting"]}
        a = app_to_bytes(compile_app(seeds, fixture_graph, provider))
        b = app_to_bytes(compile_app(seeds, fixture_graph, provider))
        assert a == b

    def test_provider_failure_names_label(self):
        g = OntologyGraph([edge("fire", "related", "smoke", 0.9)])
        with pytest.raises(ProviderError) as err:
            compile_app({"c": ["fire"]}, g, FailingProvider("smoke"))
        assert err.value.label == "smoke"

    def test_underscore_labels_average_both_renderings(self):
        provider = SyntheticProvider(9, 24)
        emb = embed_label(provider, "fire_prevention")
        a = provider.embed_text("fire_prevention").values.astype(np.float64)
        b = provider.embed_text("fire prevention").values.astype(np.float64)
        expected = normalize(Embedding(((a + b) / 2.0).astype(np.float32)))
        assert emb == expected

    def test_no_dangling_labels(self, danger_app):
        for _, terms in danger_app.expansion:
            for t in terms:
                assert danger_app.label_embeddings.lookup(t.term) is not None

    def test_every_label_is_a_term(self, danger_app):
        terms = {
            t.term for _, class_terms in danger_app.expansion for t in class_terms
        }
        assert set(danger_app.label_embeddings.labels) == terms


class TestAppPackage:
    def test_round_trip(self, small_app, tmp_path):
        path = save_app(small_app, tmp_path / "app.eap1")
        loaded = load_app(path)
        assert loaded == small_app
        assert app_to_bytes(loaded) == app_to_bytes(small_app)

    def test_version_999_rejected(self, small_app, tmp_path):
        blob = bytearray(app_to_bytes(small_app))
        blob[4:8] = (999).to_bytes(4, "little")
        with pytest.raises(VersionUnsupportedError):
            app_from_bytes(bytes(blob))

    def test_bad_magic_rejected(self, small_app):
        blob = b"XXXX" + app_to_bytes(small_app)[4:]
        with pytest.raises(FormatError):
            app_from_bytes(blob)

    def test_truncated_manifest_rejected(self, small_app):
        blob = app_to_bytes(small_app)
        with pytest.raises(FormatError):
            app_from_bytes(blob[:20])

    def test_reexported_ontology_contains_every_expansion_edge(
        self, danger_app, tmp_path
    ):
        tsv = export_ontology_tsv(danger_app)
        p = tmp_path / "re.tsv"
        p.write_text(tsv, encoding="utf-8")
        from scenescore import load_ontology

        g = load_ontology(p)
        triples = {(s, r, t) for s, r, t, _ in g.edges()}
        for _, terms in danger_app.expansion:
            for t in terms:
                if t.depth == 0:
                    continue
                relation = (
                    Relation.ANTONYM
                    if t.polarity is Polarity.NEGATIVE
                    else Relation.RELATED
                )
                assert (t.source_seed, relation, t.term) in triples

    def test_provenance_round_trips(self, tmp_path):
        provider = SyntheticProvider(5, 16)
        app = compile_app(
            {"c": ["fire"]}, EMPTY, provider, provenance={"ontology": "sha256:abc"}
        )
        loaded = load_app(save_app(app, tmp_path / "p.eap1"))
        assert dict(loaded.provenance) == {
            "ontology": "sha256:abc",
            "provider": "synthetic:5:16",
        }
