"""File-based pipeline stages.

Each stage reads JSONL, writes JSONL atomically, and returns counters that
reconcile: nothing read may go unaccounted. Stage functions are shared by the
individual CLI subcommands and the one-shot pipeline command, so both paths
produce identical files.
"""

from __future__ import annotations

from pathlib import Path

from . import assemble as asm
from . import corpus, extract, filtering, genqa
from .jsonio import read_jsonl, write_jsonl


class PipelineError(RuntimeError):
    """A stage cannot proceed (inconsistent inputs, backend unreachable)."""


def stage_extract(
    corpus_path,
    output_path,
    *,
    fmt: str = corpus.JSONL_EMBEDDED,
    quarantine_path=None,
    include_boolean: bool = True,
) -> dict:
    """Corpus -> candidate answers. read = captions_ok + quarantined."""
    quarantined: list[corpus.QuarantineRecord] = []
    counters = {"read": 0, "captions_ok": 0, "quarantined": 0, "dropped": 0, "emitted": 0}

    def rows():
        for cap in corpus.load_corpus(corpus_path, fmt, quarantine=quarantined.append):
            counters["captions_ok"] += 1
            for cand in extract.extract_candidates(cap, include_boolean):
                counters["emitted"] += 1
                yield extract.candidate_to_json(cand)

    write_jsonl(output_path, rows())
    counters["quarantined"] = len(quarantined)
    counters["read"] = counters["captions_ok"] + counters["quarantined"]
    if quarantine_path is not None:
        write_jsonl(
            quarantine_path,
            ({"line": q.line_no, "reason": q.reason, "record": q.raw} for q in quarantined),
        )
    return counters


def _caption_index(corpus_path, fmt) -> dict[str, corpus.AnnotatedCaption]:
    return {
        cap.caption_id: cap
        for cap in corpus.load_corpus(corpus_path, fmt, quarantine=lambda _q: None)
    }


def stage_generate(
    candidates_path,
    corpus_path,
    output_path,
    *,
    backend,
    fmt: str = corpus.JSONL_EMBEDDED,
) -> dict:
    """Candidates -> generated questions. read = emitted + dropped."""
    captions = _caption_index(corpus_path, fmt)
    candidates = [obj for _ln, obj in read_jsonl(candidates_path)]
    requests = []
    for obj in candidates:
        cap = captions.get(str(obj["caption_id"]))
        if cap is None:
            raise PipelineError(f"candidate references unknown caption_id {obj['caption_id']!r}")
        requests.append((obj, cap, genqa.QGRequest(cap.text, str(obj["answer"]))))
    results = genqa.run_batch(backend, [r for _, _, r in requests]) if requests else []
    rows = []
    dropped = 0
    transport_errors = []
    for (obj, cap, _req), result in zip(requests, results):
        if isinstance(result, genqa.GenerationFailedError):
            dropped += 1
            continue
        if isinstance(result, genqa.BackendError):
            transport_errors.append(result)
            continue
        row = {
            "image_id": obj["image_id"],
            "caption_id": obj["caption_id"],
            "caption": cap.text,
            "answer": obj["answer"],
            "question": result.question,
            "qg_score": result.score,
        }
        if cap.split_hint is not None:
            row["split_hint"] = cap.split_hint
        rows.append(row)
    if transport_errors:
        raise PipelineError(
            f"{len(transport_errors)} generation requests failed: {transport_errors[0]}"
        )
    write_jsonl(output_path, rows)
    return {"read": len(candidates), "emitted": len(rows), "dropped": dropped, "quarantined": 0}


def stage_filter(
    generated_path,
    decisions_path,
    validated_path,
    *,
    backend,
    threshold: float = filtering.DEFAULT_THRESHOLD,
) -> dict:
    """Generated pairs -> decisions + validated triplets.

    read = passed + failed + skipped; emitted = passed + skipped. Rows marked
    zero_count bypass the backend entirely.
    """
    rows = [obj for _ln, obj in read_jsonl(generated_path)]
    qa_indices = [i for i, obj in enumerate(rows) if not obj.get("zero_count", False)]
    qa_requests = [
        genqa.QARequest(str(rows[i]["question"]), str(rows[i]["caption"])) for i in qa_indices
    ]
    responses = genqa.run_batch(backend, qa_requests) if qa_requests else []
    answers: dict[int, genqa.QAResponse] = {}
    transport_errors = []
    for i, result in zip(qa_indices, responses):
        if isinstance(result, genqa.BackendError):
            transport_errors.append(result)
        else:
            answers[i] = result
    if transport_errors:
        # a decision is deferred, never silently passed: fail the stage
        raise PipelineError(
            f"{len(transport_errors)} answer requests failed: {transport_errors[0]}"
        )
    decision_rows = []
    validated_rows = []
    passed = failed = skipped = 0
    for i, obj in enumerate(rows):
        if obj.get("zero_count", False):
            decision = filtering.skip_decision(str(obj["answer"]), threshold)
            skipped += 1
        else:
            decision = filtering.decide(str(obj["answer"]), answers[i].answer, threshold)
            if decision.passed:
                passed += 1
            else:
                failed += 1
        decision_rows.append(
            filtering.decision_to_json(str(obj["caption_id"]), str(obj["question"]), decision)
        )
        if decision.passed:
            row = {
                "image_id": obj["image_id"],
                "caption_id": obj["caption_id"],
                "question": obj["question"],
                "answer": obj["answer"],
                "provenance": obj.get(
                    "provenance",
                    asm.PROVENANCE_ZERO_COUNT if obj.get("zero_count") else asm.PROVENANCE_GENERATED,
                ),
                "status": asm.STATUS_VALIDATED,
            }
            if obj.get("split_hint") is not None:
                row["split_hint"] = obj["split_hint"]
            validated_rows.append(row)
    write_jsonl(decisions_path, decision_rows)
    write_jsonl(validated_path, validated_rows)
    return {
        "read": len(rows),
        "passed": passed,
        "failed": failed,
        "skipped": skipped,
        "emitted": len(validated_rows),
        "dropped": failed,
        "quarantined": 0,
    }


def stage_assemble(
    validated_path,
    train_path,
    dev_path,
    *,
    vocab_path=None,
    manifest_path=None,
    seed: int = 0,
    zero_rate: float = 1.0,
    strict_splits: bool = False,
    zero_answer: str = "zero",
) -> dict:
    """Validated triplets -> train/dev dataset files.

    read + injected = train_records + dev_triplets + vocab_dropped
    + split_dropped; dev triplets group into dev_records.
    """
    triplets = [asm.triplet_from_json(obj) for _ln, obj in read_jsonl(validated_path)]
    with_zero = asm.inject_zero_count(triplets, seed, zero_rate, zero_answer)
    injected = len(with_zero) - len(triplets)
    pool_empty = zero_rate > 0 and not asm.zero_count_pool(triplets)
    if vocab_path is not None:
        vocab = asm.AnswerVocabulary.load(vocab_path)
        kept, vocab_dropped = asm.restrict_to_vocabulary(with_zero, vocab)
    else:
        kept, vocab_dropped = with_zero, 0
    manifest = asm.load_split_manifest(manifest_path) if manifest_path is not None else None
    by_split, split_dropped = asm.assign_splits(kept, manifest, strict=strict_splits)
    train = asm.train_records(by_split["train"])
    dev = asm.group_dev_targets(by_split["dev"])
    write_jsonl(train_path, (asm.record_to_json(r) for r in train))
    write_jsonl(dev_path, (asm.record_to_json(r) for r in dev))
    return {
        "read": len(triplets),
        "injected": injected,
        "zero_pool_empty": int(pool_empty),
        "vocab_dropped": vocab_dropped,
        "split_dropped": split_dropped,
        "train_records": len(train),
        "dev_triplets": len(by_split["dev"]),
        "dev_records": len(dev),
        "emitted": len(train) + len(dev),
    }


def format_summary(stage: str, counters: dict) -> str:
    body = " ".join(f"{key}={value}" for key, value in counters.items())
    return f"[{stage}] {body}"


PIPELINE_FILES = {
    "candidates": "candidates.jsonl",
    "quarantine": "quarantine.jsonl",
    "generated": "generated.jsonl",
    "decisions": "decisions.jsonl",
    "validated": "validated.jsonl",
    "train": "train.jsonl",
    "dev": "dev.jsonl",
}


def pipeline_paths(output_dir) -> dict[str, Path]:
    outdir = Path(output_dir)
    return {name: outdir / fname for name, fname in PIPELINE_FILES.items()}
