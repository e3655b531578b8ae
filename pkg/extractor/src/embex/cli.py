"""Command line: extract a manifest's entries into an EMB1 file."""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ExtractorError
from .extract import extract_all
from .manifest import load_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embex",
        description="Embed texts, button images, and clip frames into EMB1 tables",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="run the encoders over a manifest")
    p.add_argument("--manifest", required=True, help="manifest JSON file")
    p.add_argument("--out", required=True, help="output EMB1 path")
    p.add_argument(
        "--fps",
        type=float,
        help="frame rate the clips were sampled at (overrides the manifest)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = load_manifest(args.manifest)
        if args.fps is not None:
            if args.fps <= 0:
                raise ExtractorError(f"fps must be positive, got {args.fps}")
            manifest.fps = args.fps
        out = extract_all(manifest, args.out)
        print(f"wrote {out} ({len(manifest.entries)} entries, {manifest.fps:g} fps)")
        return 0
    except ExtractorError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except OSError as exc:
        print(
            json.dumps({"error": "IoError", "message": str(exc)}), file=sys.stderr
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
