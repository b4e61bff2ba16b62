"""Command-line surface wiring compile -> infer -> evaluate together.

Machine-readable output (JSON, or CSV where requested) goes to stdout;
diagnostics go to stderr. Exit codes: 0 success, 2 usage error, 3
format/data error, 4 remote-service error. ``ETHOS_LOG`` picks the stderr
log level.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import compiler, evaluation, loop
from .affinity import (
    bundle_from_label_set,
    compute_grid_affinities,
    heatmap_to_csv,
    heatmap_to_dict,
)
from .embeddings import (
    Embedding,
    LabelEmbeddingSet,
    load_embeddings,
    normalize,
    save_embeddings,
)
from .errors import ConfigError, DataError, EngineError, RemoteServiceError
from .ontology import OntologyGraph, Relation, load_ontology
from .providers import parse_provider_spec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_REMOTE = 4


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True))
    sys.stdout.write("\n")


def _load_seeds(path: str) -> dict[str, list[str]]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        classes = doc["classes"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f'seeds file must be {{"classes": {{...}}}}: {exc}') from exc
    if not isinstance(classes, dict):
        raise DataError("seeds classes must be an object of name -> seed list")
    return {str(k): [str(s) for s in v] for k, v in classes.items()}


def _load_graph(path: str | None) -> OntologyGraph:
    if path is None:
        return OntologyGraph([])
    return load_ontology(path)


def _relations(spec: str) -> frozenset[Relation]:
    return frozenset(Relation.parse(name.strip()) for name in spec.split(","))


def _compile_config(args) -> compiler.CompileConfig:
    kwargs = {}
    if args.relations_positive:
        kwargs["relations_positive"] = _relations(args.relations_positive)
    if args.relations_negative:
        kwargs["relations_negative"] = _relations(args.relations_negative)
    if args.grid:
        try:
            rows, cols = (int(x) for x in args.grid.lower().split("x"))
            kwargs["grid"] = (rows, cols)
        except ValueError:
            raise ConfigError(f"bad --grid {args.grid!r}, want RxC") from None
    if args.reasoner_endpoint:
        kwargs["reasoner_endpoint"] = args.reasoner_endpoint
    return compiler.CompileConfig(
        max_depth=args.max_depth,
        max_terms_per_seed=args.max_terms_per_seed,
        temperature=args.temperature,
        **kwargs,
    )


def _load_probe(spec: str, label: str | None) -> Embedding:
    """Probe embedding from an inline JSON array or an EEF1/JSON-mirror file."""
    if spec.lstrip().startswith("["):
        try:
            values = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad inline embedding: {exc}") from exc
        return normalize(Embedding(np.asarray(values, dtype=np.float32)))
    embedding_set = load_embeddings(spec)
    if label is not None:
        emb = embedding_set.lookup(label)
        if emb is None:
            raise DataError(f"label {label!r} not in {spec}")
        return emb
    if len(embedding_set) != 1:
        raise DataError(
            f"{spec} holds {len(embedding_set)} entries; pick one with --label"
        )
    return embedding_set.entries[0][1]


def _build_reasoner(spec: str, app: compiler.AnalyticsApp):
    scheme, _, rest = spec.partition(":")
    if scheme == "walk":
        return loop.ontology_walk_reasoner(load_ontology(rest), app.config)
    if scheme in ("http", "https"):
        return loop.remote_reasoner(spec)
    raise ConfigError(f"unknown reasoner scheme {scheme!r} in {spec!r}")


def _loop_config(args, app: compiler.AnalyticsApp) -> loop.LoopConfig:
    temperature = args.temperature
    if temperature is None:
        temperature = app.config.temperature
    return loop.LoopConfig(
        max_cycles=args.max_cycles,
        top_x=args.top_x,
        convergence_jaccard=args.convergence,
        temperature=temperature,
        reasoning_enabled=args.reason,
    )


def _reasoning_pair(args, app: compiler.AnalyticsApp):
    """(reasoner, provider) when --reason is set, (None, None) otherwise."""
    if not args.reason:
        return None, None
    reasoner_spec = args.reasoner or app.config.reasoner_endpoint
    if not reasoner_spec or not args.provider:
        raise ConfigError(
            "--reason requires --provider and a reasoner (--reasoner, or an "
            "endpoint compiled into the app)"
        )
    return _build_reasoner(reasoner_spec, app), parse_provider_spec(args.provider)


def cmd_compile(args) -> int:
    seeds = _load_seeds(args.seeds)
    graph = _load_graph(args.ontology)
    provider = parse_provider_spec(args.provider)
    cfg = _compile_config(args)
    provenance = {}
    if args.ontology:
        digest = hashlib.sha256(Path(args.ontology).read_bytes()).hexdigest()
        provenance["ontology"] = f"sha256:{digest}"
    app = compiler.compile_app(seeds, graph, provider, cfg, provenance)
    compiler.save_app(app, args.out)
    _emit(
        {
            "path": args.out,
            "classes": len(app.classes),
            "labels": len(app.label_embeddings),
            "dim": app.label_embeddings.dim,
        }
    )
    return EXIT_OK


def cmd_expand(args) -> int:
    seeds = _load_seeds(args.seeds)
    graph = _load_graph(args.ontology)
    cfg = _compile_config(args)
    expansion = compiler.semantic_expand(seeds, graph, cfg)
    _emit(
        {"classes": {c: [t.to_dict() for t in terms] for c, terms in expansion.items()}}
    )
    return EXIT_OK


def cmd_infer(args) -> int:
    app = compiler.load_app(args.app)
    probe = _load_probe(args.embedding, args.label)
    cfg = _loop_config(args, app)
    reasoner, provider = _reasoning_pair(args, app)
    report = loop.run_inference(app, probe, reasoner, provider, cfg)
    sys.stdout.write(report.to_json(top=args.top))
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_grid(args) -> int:
    app = compiler.load_app(args.app)
    bundle = bundle_from_label_set(load_embeddings(args.grid_bundle))
    grid = compute_grid_affinities(
        bundle, app.label_embeddings, app.config.temperature
    )
    if args.format == "csv":
        sys.stdout.write(heatmap_to_csv(grid, args.label))
    else:
        _emit(heatmap_to_dict(grid, args.label))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    app = compiler.load_app(args.app)
    manifest = evaluation.load_manifest(args.manifest)
    cfg = _loop_config(args, app)
    reasoner, provider = _reasoning_pair(args, app)
    report = evaluation.evaluate_multiclass(app, manifest, cfg, reasoner, provider)
    if args.compare:
        baseline = evaluation.MetricsReport.from_dict(
            json.loads(Path(args.compare).read_text(encoding="utf-8"))
        )
        _emit(evaluation.compare_runs(baseline, report))
    elif args.format == "csv":
        sys.stdout.write(report.per_class_csv())
    else:
        _emit(report.to_dict())
    return EXIT_OK


def cmd_roc(args) -> int:
    app = compiler.load_app(args.app)
    manifest = evaluation.load_manifest(args.manifest)
    cfg = _loop_config(args, app)
    reasoner, provider = _reasoning_pair(args, app)
    positive = {c.strip() for c in args.positive.split(",") if c.strip()}
    if not positive:
        raise ConfigError("--positive needs at least one class")
    curve = evaluation.evaluate_binary_roc(
        app, manifest, positive, cfg, reasoner, provider
    )
    if args.compare:
        baseline = evaluation.RocCurve.from_dict(
            json.loads(Path(args.compare).read_text(encoding="utf-8"))
        )
        _emit(evaluation.compare_runs(baseline, curve))
    elif args.format == "csv":
        sys.stdout.write(curve.points_csv())
    else:
        _emit(curve.to_dict())
    return EXIT_OK


def cmd_export_ontology(args) -> int:
    app = compiler.load_app(args.app)
    tsv = compiler.export_ontology_tsv(app)
    Path(args.out).write_text(tsv, encoding="utf-8")
    _emit({"path": args.out, "edges": sum(1 for _ in tsv.splitlines())})
    return EXIT_OK


def cmd_embed_file(args) -> int:
    if args.json_in:
        embedding_set = load_embeddings(args.json_in)
    else:
        if not args.labels or not args.provider:
            raise ConfigError("need --labels and --provider (or --json-in)")
        provider = parse_provider_spec(args.provider)
        labels = [
            line.strip()
            for line in Path(args.labels).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.strip().startswith("#")
        ]
        entries = tuple(
            (label, compiler.embed_label(provider, label)) for label in labels
        )
        if not entries:
            raise DataError(f"no labels in {args.labels}")
        embedding_set = LabelEmbeddingSet(entries[0][1].dim, entries)
    save_embeddings(embedding_set, args.out)
    _emit({"path": args.out, "count": len(embedding_set), "dim": embedding_set.dim})
    return EXIT_OK


def _add_compile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-depth", type=int, default=2)
    p.add_argument("--max-terms-per-seed", type=int, default=32)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--relations-positive", help="comma-separated relation names")
    p.add_argument("--relations-negative", help="comma-separated relation names")
    p.add_argument("--grid", help="RxC, e.g. 3x3")
    p.add_argument("--reasoner-endpoint")


def _add_loop_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-cycles", type=int, default=10)
    p.add_argument("--top-x", type=int, default=5)
    p.add_argument("--convergence", type=float, default=1.0)
    p.add_argument("--temperature", type=float, default=None,
                   help="override the app's compiled temperature")
    p.add_argument("--batch-size", type=int, default=1,
                   help="accepted for compatibility; scoring is a plain loop")
    p.add_argument("--reason", action="store_true")
    p.add_argument("--reasoner", help="walk:ontology.tsv or http://...")
    p.add_argument("--provider", help="synthetic:seed:dim, file:path or http://...")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenescore",
        description="Zero-shot label affinity engine over precomputed embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="expand seeds and build an analytics app")
    p.add_argument("--seeds", required=True)
    p.add_argument("--ontology")
    p.add_argument("--provider", required=True)
    p.add_argument("--out", required=True)
    _add_compile_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("expand", help="run semantic expansion without embedding")
    p.add_argument("--seeds", required=True)
    p.add_argument("--ontology")
    _add_compile_flags(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("infer", help="score one embedding against an app")
    p.add_argument("--app", required=True)
    p.add_argument("--embedding", required=True,
                   help="EEF1/JSON file or inline JSON array")
    p.add_argument("--label", help="entry to pick from a multi-entry file")
    p.add_argument("--top", type=int, default=100)
    _add_loop_flags(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("grid", help="per-cell heatmap for one label")
    p.add_argument("--app", required=True)
    p.add_argument("--grid-bundle", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("evaluate", help="multi-class metrics over a manifest")
    p.add_argument("--app", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--compare", help="baseline MetricsReport JSON file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_loop_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("roc", help="binary ROC/AUC over a manifest")
    p.add_argument("--app", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--positive", required=True, help="comma-separated class names")
    p.add_argument("--compare", help="baseline RocCurve JSON file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_loop_flags(p)
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("export-ontology", help="re-export an app's expansion as TSV")
    p.add_argument("--app", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_ontology)

    p = sub.add_parser("embed-file", help="build an EEF1 file from labels")
    p.add_argument("--labels", help="text file, one label per line")
    p.add_argument("--provider")
    p.add_argument("--json-in", help="convert a JSON mirror instead")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed_file)

    return parser


def _setup_logging() -> None:
    level = os.environ.get("ETHOS_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RemoteServiceError as exc:
        print(f"remote service error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
