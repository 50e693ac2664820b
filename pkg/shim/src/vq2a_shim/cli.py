"""Launch the shim service."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import uvicorn

from .app import create_app
from .engines import DEFAULT_QA_MODEL, DEFAULT_QG_MODEL, ModelLoadError, RecordedEngine

DEFAULT_RECORDINGS = Path(__file__).parent / "recordings" / "bears_roundtrip.jsonl"


def build_engine(args):
    if args.engine == "recorded":
        return RecordedEngine.load(args.recordings)
    from .engines import TransformersEngine  # imports torch lazily

    return TransformersEngine(args.qg_model, args.qa_model, args.device)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vq2a-shim", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument(
        "--engine",
        choices=("transformers", "recorded"),
        default="transformers",
        help="recorded replays a fixture file and needs no checkpoints",
    )
    parser.add_argument("--qg-model", default=DEFAULT_QG_MODEL)
    parser.add_argument("--qa-model", default=DEFAULT_QA_MODEL)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--recordings", default=str(DEFAULT_RECORDINGS))
    args = parser.parse_args(argv)
    try:
        engine = build_engine(args)
    except ModelLoadError as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(create_app(engine), host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
