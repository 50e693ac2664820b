"""Command-line interface: composable pipeline stages plus a one-shot runner.

Stage commands read and write files, print one summary line with reconciling
counts, and exit nonzero on any hard error. `pipeline` chains extract ->
generate -> filter -> assemble into an output directory and is byte-identical
to running the stages individually with the same flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import assemble as asm
from . import corpus, filtering, genqa, metrics
from .jsonio import MalformedLineError, atomic_writer
from .pipeline import (
    PipelineError,
    format_summary,
    pipeline_paths,
    stage_assemble,
    stage_extract,
    stage_filter,
    stage_generate,
)

ENV_BACKEND = "VQ2A_BACKEND"
DEFAULT_SEED = 20

_USER_ERRORS = (
    PipelineError,
    genqa.BackendError,
    asm.SplitAssignmentError,
    metrics.DuplicatePredictionError,
    MalformedLineError,
    corpus.CaptionValidationError,
    OSError,
    ValueError,
)


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend",
        default=None,
        help=f"backend endpoint: 'stub' or an http(s) URL (default: ${ENV_BACKEND} or stub)",
    )
    parser.add_argument("--max-in-flight", type=int, default=4, help="concurrent backend requests")
    parser.add_argument("--timeout-ms", type=int, default=30000, help="per-request timeout")
    parser.add_argument("--cache-dir", default=None, help="optional on-disk response cache")


def _backend_from_args(args):
    endpoint = args.backend or os.environ.get(ENV_BACKEND) or genqa.STUB_ENDPOINT
    config = genqa.BackendConfig(
        endpoint=endpoint,
        timeout_s=args.timeout_ms / 1000.0,
        max_in_flight=args.max_in_flight,
        cache_dir=args.cache_dir,
    )
    return genqa.create_backend(config)


def _print_summary(stage: str, counters: dict) -> None:
    print(format_summary(stage, counters))


def cmd_extract(args) -> int:
    counters = stage_extract(
        args.input,
        args.output,
        fmt=args.input_format,
        quarantine_path=args.quarantine,
        include_boolean=not args.no_boolean,
    )
    _print_summary("extract", counters)
    return 0


def cmd_generate(args) -> int:
    counters = stage_generate(
        args.input,
        args.corpus,
        args.output,
        backend=_backend_from_args(args),
        fmt=args.input_format,
    )
    _print_summary("generate", counters)
    return 0


def cmd_filter(args) -> int:
    counters = stage_filter(
        args.input,
        args.decisions,
        args.output,
        backend=_backend_from_args(args),
        threshold=args.threshold,
    )
    _print_summary("filter", counters)
    return 0


def cmd_assemble(args) -> int:
    outdir = Path(args.output_dir)
    counters = stage_assemble(
        args.input,
        outdir / "train.jsonl",
        outdir / "dev.jsonl",
        vocab_path=args.vocab,
        manifest_path=args.split_manifest,
        seed=args.seed,
        zero_rate=args.zero_rate,
        strict_splits=args.strict_splits,
        zero_answer=args.zero_answer,
    )
    if counters.pop("zero_pool_empty", 0):
        print("warning: zero-count pool is empty, nothing injected", file=sys.stderr)
    _print_summary("assemble", counters)
    return 0


def cmd_pipeline(args) -> int:
    paths = pipeline_paths(args.output_dir)
    backend = _backend_from_args(args)
    counters = stage_extract(
        args.input,
        paths["candidates"],
        fmt=args.input_format,
        quarantine_path=paths["quarantine"],
        include_boolean=not args.no_boolean,
    )
    _print_summary("extract", counters)
    counters = stage_generate(
        paths["candidates"], args.input, paths["generated"], backend=backend, fmt=args.input_format
    )
    _print_summary("generate", counters)
    counters = stage_filter(
        paths["generated"], paths["decisions"], paths["validated"],
        backend=backend, threshold=args.threshold,
    )
    _print_summary("filter", counters)
    counters = stage_assemble(
        paths["validated"],
        paths["train"],
        paths["dev"],
        vocab_path=args.vocab,
        manifest_path=args.split_manifest,
        seed=args.seed,
        zero_rate=args.zero_rate,
        strict_splits=args.strict_splits,
        zero_answer=args.zero_answer,
    )
    if counters.pop("zero_pool_empty", 0):
        print("warning: zero-count pool is empty, nothing injected", file=sys.stderr)
    _print_summary("assemble", counters)
    return 0


def _write_json_report(path, payload: dict) -> None:
    with atomic_writer(path) as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def cmd_eval(args) -> int:
    report = metrics.evaluate(args.dataset, args.predictions, args.metric)
    print(
        f"[eval] metric={report.metric} overall={report.overall:.6f} "
        f"records={report.records} matched={report.matched} "
        f"missing={report.missing_predictions} unmatched={report.unmatched_predictions}"
    )
    if report.breakdown:
        print(f"{'prefix':<24} {'accuracy':>10} {'count':>7}")
        for prefix, (accuracy, count) in sorted(
            report.breakdown.items(), key=lambda kv: (-kv[1][1], kv[0])
        ):
            print(f"{prefix:<24} {accuracy:>10.4f} {count:>7}")
    if args.json_report:
        _write_json_report(args.json_report, report.to_json())
    if args.figures:
        from . import reports  # defers the matplotlib import

        for path in reports.render_eval_report(report, args.figures):
            print(f"wrote {path}")
    return 0


def cmd_stats(args) -> int:
    stats = metrics.corpus_stats(args.dataset, args.filter_log)
    print(
        f"[stats] records={stats.records} "
        f"question_length_mean={stats.question_length_mean:.4f} "
        f"answer_length_mean={stats.answer_length_mean:.4f}"
    )
    if stats.prefix_distribution:
        print(f"{'prefix':<24} {'fraction':>10} {'count':>7}")
        for prefix, fraction in sorted(
            stats.prefix_distribution.items(), key=lambda kv: (-kv[1], kv[0])
        ):
            print(f"{prefix:<24} {fraction:>10.4f} {stats.prefix_counts[prefix]:>7}")
    if stats.filter_pass_ratios is not None:
        print(f"{'prefix':<24} {'pass_ratio':>10} {'passed':>7} {'failed':>7} {'skipped':>7}")
        for prefix, bucket in stats.filter_pass_ratios.items():
            ratio = "n/a" if bucket["ratio"] is None else f"{bucket['ratio']:.4f}"
            print(
                f"{prefix:<24} {ratio:>10} {bucket['passed']:>7} "
                f"{bucket['failed']:>7} {bucket['skipped']:>7}"
            )
    if args.json_report:
        _write_json_report(args.json_report, stats.to_json())
    if args.figures:
        from . import reports

        for path in reports.render_stats_report(stats, args.figures):
            print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vq2a",
        description="Generate, filter and evaluate VQA datasets from annotated captions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract candidate answers from a corpus")
    p.add_argument("--input", required=True, help="corpus JSONL")
    p.add_argument("--output", required=True, help="candidates JSONL")
    p.add_argument("--input-format", choices=corpus.FORMATS, default=corpus.JSONL_EMBEDDED)
    p.add_argument("--quarantine", default=None, help="where to write rejected records")
    p.add_argument("--no-boolean", action="store_true", help="skip yes/no candidates")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("generate", help="generate one question per candidate")
    p.add_argument("--input", required=True, help="candidates JSONL")
    p.add_argument("--corpus", required=True, help="corpus JSONL (caption text source)")
    p.add_argument("--output", required=True, help="generated questions JSONL")
    p.add_argument("--input-format", choices=corpus.FORMATS, default=corpus.JSONL_EMBEDDED)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("filter", help="round-trip validate generated questions")
    p.add_argument("--input", required=True, help="generated questions JSONL")
    p.add_argument("--decisions", required=True, help="decision log JSONL")
    p.add_argument("--output", required=True, help="validated triplets JSONL")
    p.add_argument("--threshold", type=float, default=filtering.DEFAULT_THRESHOLD)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("assemble", help="assemble train/dev dataset files")
    p.add_argument("--input", required=True, help="validated triplets JSONL")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--vocab", default=None, help="answer vocabulary, one per line")
    p.add_argument("--split-manifest", default=None, help="image_id<TAB>split or JSONL")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--zero-rate", type=float, default=1.0)
    p.add_argument("--zero-answer", default="zero")
    p.add_argument("--strict-splits", action="store_true")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("pipeline", help="run extract/generate/filter/assemble end to end")
    p.add_argument("--input", required=True, help="corpus JSONL")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--input-format", choices=corpus.FORMATS, default=corpus.JSONL_EMBEDDED)
    p.add_argument("--threshold", type=float, default=filtering.DEFAULT_THRESHOLD)
    p.add_argument("--vocab", default=None)
    p.add_argument("--split-manifest", default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--zero-rate", type=float, default=1.0)
    p.add_argument("--zero-answer", default="zero")
    p.add_argument("--strict-splits", action="store_true")
    p.add_argument("--no-boolean", action="store_true")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", help="score a predictions file against a dataset")
    p.add_argument("--dataset", required=True, help="dataset JSONL (train or dev)")
    p.add_argument("--predictions", required=True, help="predictions JSONL")
    p.add_argument("--metric", choices=metrics.METRICS, default=metrics.VQA_ACCURACY)
    p.add_argument("--json-report", default=None, help="write the report as JSON")
    p.add_argument("--figures", default=None, help="directory for figures and TSV tables")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="corpus analytics for a dataset file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--filter-log", default=None, help="decision log for pass ratios")
    p.add_argument("--json-report", default=None)
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
