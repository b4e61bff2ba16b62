"""CLI: export-text, export-grid, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ExporterError
from .export import export_grid_bundle, export_text_embeddings
from .models import parse_model_spec
from .service import serve


def cmd_export_text(args) -> int:
    model = parse_model_spec(args.model)
    labels = [
        line.strip()
        for line in Path(args.labels).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    path = export_text_embeddings(model, labels, args.out)
    print(json.dumps({"path": str(path), "count": len(labels), "dim": model.dim}))
    return 0


def cmd_export_grid(args) -> int:
    model = parse_model_spec(args.model)
    path = export_grid_bundle(model, args.image, args.rows, args.cols, args.out)
    print(
        json.dumps(
            {
                "path": str(path),
                "entries": args.rows * args.cols + 1,
                "dim": model.dim,
            }
        )
    )
    return 0


def cmd_serve(args) -> int:
    model = parse_model_spec(args.model)
    serve(model, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-exporter",
        description="Produce EEF1 embedding files and serve the /embed contract.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-text", help="embed a label list into an EEF1 file")
    p.add_argument("--labels", required=True, help="text file, one label per line")
    p.add_argument("--model", default="hashed:0:64", help="hashed:seed:dim or clip:checkpoint")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_text)

    p = sub.add_parser("export-grid", help="embed image grid cells into an EEF1 file")
    p.add_argument("--image", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--model", default="hashed:0:64")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_grid)

    p = sub.add_parser("serve", help="run the /embed HTTP service")
    p.add_argument("--model", default="hashed:0:64")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8090)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
