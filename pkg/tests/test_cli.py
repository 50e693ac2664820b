import json
import re
from pathlib import Path

import pytest

from vq2a.cli import main

import synth
from conftest import DATA
from test_genqa import ScriptedServer


def read_lines(path):
    return Path(path).read_text(encoding="utf-8").splitlines()


def parse_summary(line):
    stage, rest = re.match(r"\[(\w+)\] (.*)", line).groups()
    return stage, {k: v for k, v in (kv.split("=") for kv in rest.split())}


def run_cli(args):
    return main([str(a) for a in args])


# --- extract ---------------------------------------------------------------------


def test_extract_golden_fixture(tmp_path, capsys):
    out = tmp_path / "candidates.jsonl"
    assert run_cli(["extract", "--input", DATA / "bears.jsonl", "--output", out]) == 0
    rows = [json.loads(line) for line in read_lines(out)]
    assert len(rows) == 10
    assert {r["answer"] for r in rows} == {
        "two", "bears", "two bears", "laying", "laying down",
        "ice", "the ice", "on the ice", "no", "yes",
    }
    stage, counts = parse_summary(capsys.readouterr().out.strip())
    assert stage == "extract"
    assert counts["read"] == "1" and counts["emitted"] == "10"


def test_extract_quarantine_and_counts(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    with open(corpus, "w", encoding="utf-8") as fh:
        fh.write((DATA / "bears.jsonl").read_text(encoding="utf-8"))
        fh.write(json.dumps({"image_id": "b", "caption_id": "b", "text": "x", "tokens": []}) + "\n")
    out = tmp_path / "cands.jsonl"
    quarantine = tmp_path / "quarantine.jsonl"
    assert run_cli(["extract", "--input", corpus, "--output", out, "--quarantine", quarantine]) == 0
    _, counts = parse_summary(capsys.readouterr().out.strip())
    assert counts == {"read": "2", "captions_ok": "1", "quarantined": "1", "dropped": "0", "emitted": "10"}
    assert len(read_lines(quarantine)) == 1


def test_extract_missing_input_fails(tmp_path, capsys):
    assert run_cli(["extract", "--input", tmp_path / "nope.jsonl", "--output", tmp_path / "o"]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_flag_exits_two():
    with pytest.raises(SystemExit) as err:
        run_cli(["extract", "--nonsense"])
    assert err.value.code == 2


def test_atomicity_no_partial_output_on_failure(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    with open(corpus, "w", encoding="utf-8") as fh:
        fh.write((DATA / "bears.jsonl").read_text(encoding="utf-8"))
        fh.write("{broken json\n")
    out = tmp_path / "cands.jsonl"
    assert run_cli(["extract", "--input", corpus, "--output", out]) == 1
    assert not out.exists()
    assert not list(tmp_path.glob("*.tmp"))


# --- filter with a canned QA backend ------------------------------------------------

CANNED_ANSWERS = {
    "How many bears are laying on the ice?": "two",
    "What are the two animals laying on the ice?": "bears",
    "What are the bears doing?": "laying down on the ice",
    "Two bears are laying down on what?": "the ice",
    "Where are the bears laying?": "on the ice",
    "Are the bears sleeping?": "yes",
    "Are the bears on the ice?": "yes",
}

ROUNDTRIP_FIXTURE = [
    ("two", "How many bears are laying on the ice?", False),
    ("bears", "What are the two animals laying on the ice?", False),
    ("two bears", "How many bears are laying on the ice?", False),
    ("laying", "What are the bears doing?", False),
    ("laying down", "What are the bears doing?", False),
    ("ice", "Two bears are laying down on what?", False),
    ("the ice", "Where are the bears laying?", False),
    ("on the ice", "Where are the bears laying?", False),
    ("no", "Are the bears sleeping?", False),
    ("yes", "Are the bears on the ice?", False),
    ("zero", "How many people are sitting down?", True),
]


def write_generated_fixture(path):
    caption = "two bears are laying down on the ice"
    rows = []
    for answer, question, zero in ROUNDTRIP_FIXTURE:
        row = {
            "image_id": "img-bears-001",
            "caption_id": "cap-bears-001",
            "caption": caption,
            "answer": answer,
            "question": question,
            "qg_score": 1.0,
        }
        if zero:
            row["zero_count"] = True
        rows.append(row)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def canned_script(path, payload, hit_no):
    assert path == "/v1/answer"
    return 200, {"answer": CANNED_ANSWERS[payload["question"]], "score": 0.9}


def test_filter_cli_reproduces_decision_counts(tmp_path, capsys):
    generated = tmp_path / "generated.jsonl"
    write_generated_fixture(generated)
    server = ScriptedServer(canned_script)
    try:
        code = run_cli(
            [
                "filter", "--input", generated,
                "--decisions", tmp_path / "decisions.jsonl",
                "--output", tmp_path / "validated.jsonl",
                "--backend", server.endpoint, "--threshold", "0.54",
            ]
        )
    finally:
        server.close()
    assert code == 0
    _, counts = parse_summary(capsys.readouterr().out.strip())
    assert counts["passed"] == "8" and counts["failed"] == "2" and counts["skipped"] == "1"
    decisions = [json.loads(line) for line in read_lines(tmp_path / "decisions.jsonl")]
    assert len(decisions) == 11
    failed = {d["answer"] for d in decisions if not d["passed"]}
    assert failed == {"laying", "no"}
    validated = [json.loads(line) for line in read_lines(tmp_path / "validated.jsonl")]
    assert len(validated) == 9
    (zero_row,) = [v for v in validated if v["answer"] == "zero"]
    assert zero_row["provenance"] == "zero_count_injected"


# --- pipeline --------------------------------------------------------------------


def _make_inputs(tmp_path, n=30):
    corpus = tmp_path / "corpus.jsonl"
    vocab = tmp_path / "vocab.txt"
    manifest = tmp_path / "manifest.tsv"
    synth.write_corpus_file(corpus, n=n, seed=5, with_bad=False)
    synth.write_vocab(vocab)
    synth.write_manifest(manifest, n=n)
    return corpus, vocab, manifest


def _pipeline_args(corpus, outdir, vocab, manifest):
    return [
        "pipeline", "--input", corpus, "--output-dir", outdir,
        "--backend", "stub", "--seed", "11", "--zero-rate", "0.5",
        "--vocab", vocab, "--split-manifest", manifest,
    ]


STAGE_FILES = ["candidates.jsonl", "generated.jsonl", "decisions.jsonl",
               "validated.jsonl", "train.jsonl", "dev.jsonl"]


def test_pipeline_matches_individual_stages(tmp_path, capsys):
    corpus, vocab, manifest = _make_inputs(tmp_path)
    pipe_dir = tmp_path / "pipe"
    assert run_cli(_pipeline_args(corpus, pipe_dir, vocab, manifest)) == 0

    stage_dir = tmp_path / "stages"
    stage_dir.mkdir()
    assert run_cli(["extract", "--input", corpus, "--output", stage_dir / "candidates.jsonl"]) == 0
    assert run_cli(
        ["generate", "--input", stage_dir / "candidates.jsonl", "--corpus", corpus,
         "--output", stage_dir / "generated.jsonl", "--backend", "stub"]
    ) == 0
    assert run_cli(
        ["filter", "--input", stage_dir / "generated.jsonl",
         "--decisions", stage_dir / "decisions.jsonl",
         "--output", stage_dir / "validated.jsonl", "--backend", "stub"]
    ) == 0
    assert run_cli(
        ["assemble", "--input", stage_dir / "validated.jsonl", "--output-dir", stage_dir,
         "--vocab", vocab, "--split-manifest", manifest, "--seed", "11", "--zero-rate", "0.5"]
    ) == 0
    for name in STAGE_FILES:
        assert (pipe_dir / name).read_bytes() == (stage_dir / name).read_bytes(), name


def test_pipeline_repeat_runs_are_byte_identical(tmp_path, capsys):
    corpus, vocab, manifest = _make_inputs(tmp_path)
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    for outdir in dirs:
        assert run_cli(_pipeline_args(corpus, outdir, vocab, manifest)) == 0
    for name in STAGE_FILES:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name


def test_backend_env_variable_default(tmp_path, capsys, monkeypatch):
    corpus, vocab, manifest = _make_inputs(tmp_path, n=4)
    monkeypatch.setenv("VQ2A_BACKEND", "stub")
    outdir = tmp_path / "envrun"
    args = _pipeline_args(corpus, outdir, vocab, manifest)
    backend_at = args.index("--backend")
    del args[backend_at : backend_at + 2]
    assert run_cli(args) == 0
    assert (outdir / "train.jsonl").exists()


# --- eval and stats -----------------------------------------------------------------


def _eval_inputs(tmp_path):
    dataset = tmp_path / "dev.jsonl"
    preds = tmp_path / "preds.jsonl"
    with open(dataset, "w", encoding="utf-8") as fh:
        for i in range(4):
            fh.write(json.dumps({
                "image_id": f"i{i}", "question": f"what is thing {i}?",
                "answers": [f"a{i}"] * 10, "provenance": "generated",
            }) + "\n")
    with open(preds, "w", encoding="utf-8") as fh:
        for i in range(4):
            fh.write(json.dumps({
                "image_id": f"i{i}", "question": f"what is thing {i}?", "answer": f"a{i}",
            }) + "\n")
    return dataset, preds


def test_eval_cli_with_report_and_figures(tmp_path, capsys):
    dataset, preds = _eval_inputs(tmp_path)
    report = tmp_path / "report.json"
    figures = tmp_path / "figs"
    code = run_cli(
        ["eval", "--dataset", dataset, "--predictions", preds, "--metric", "vqa",
         "--json-report", report, "--figures", figures]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "overall=1.000000" in out
    payload = json.loads(report.read_text(encoding="utf-8"))
    assert payload["overall"] == 1.0
    assert (figures / "prefix_accuracy.png").stat().st_size > 0
    assert (figures / "prefix_accuracy.tsv").exists()


def test_stats_cli_with_filter_log_and_figures(tmp_path, capsys):
    dataset, _ = _eval_inputs(tmp_path)
    log = tmp_path / "decisions.jsonl"
    with open(log, "w", encoding="utf-8") as fh:
        for i in range(5):
            fh.write(json.dumps({
                "caption_id": "c", "answer": "x", "question": "what is thing 1?",
                "validated_answer": "x", "f1": 1.0, "passed": i != 0, "skipped": False,
            }) + "\n")
    report = tmp_path / "stats.json"
    figures = tmp_path / "figs"
    code = run_cli(
        ["stats", "--dataset", dataset, "--filter-log", log,
         "--json-report", report, "--figures", figures]
    )
    assert code == 0
    payload = json.loads(report.read_text(encoding="utf-8"))
    assert payload["records"] == 4
    assert payload["filter_pass_ratios"]["what is"]["ratio"] == 0.8
    assert (figures / "question_length_hist.png").stat().st_size > 0
    assert (figures / "prefix_distribution.tsv").exists()
    assert (figures / "filter_pass_ratios.tsv").exists()
