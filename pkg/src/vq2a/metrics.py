"""Prediction-file evaluation and corpus analytics for assembled datasets."""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .jsonio import read_jsonl

VQA_ACCURACY = "vqa"
TOP1_ACCURACY = "top1"
METRICS = (VQA_ACCURACY, TOP1_ACCURACY)

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)

ANSWER_TARGET_SIZE = 10


class DuplicatePredictionError(ValueError):
    """Two predictions share one (image_id, question) key."""


def _norm_answer(answer: str) -> str:
    return answer.strip().lower()


def vqa_accuracy(prediction: str, target: Sequence[str]) -> float:
    """Mean over all 10 leave-one-out subsets of min(matches/3, 1).

    With k targets matching the prediction, a subset dropping a match sees k-1
    matches and every other subset sees k, so the mean collapses to the
    closed form (k*min(k-1, 3) + (10-k)*min(k, 3)) / 30. The numerator stays
    in integers so the result is the exactly-rounded rational. Matching is
    exact string equality after lowercasing and trimming.
    """
    if len(target) != ANSWER_TARGET_SIZE:
        raise ValueError(f"expected {ANSWER_TARGET_SIZE} target answers, got {len(target)}")
    pred = _norm_answer(prediction)
    k = sum(1 for t in target if _norm_answer(t) == pred)
    n = len(target)
    return (k * min(k - 1, 3) + (n - k) * min(k, 3)) / (3 * n)


def top1_accuracy(prediction: str, target: str) -> float:
    return 1.0 if _norm_answer(prediction) == _norm_answer(target) else 0.0


def question_prefix(question: str, depth: int = 2) -> str:
    """First `depth` whitespace tokens, lowercased and punctuation-stripped;
    shorter questions yield what they have."""
    tokens = question.split()[:depth]
    cleaned = [t.lower().translate(_PUNCT_TABLE) for t in tokens]
    return " ".join(t for t in cleaned if t)


@dataclass
class EvalReport:
    metric: str
    overall: float
    records: int
    matched: int
    missing_predictions: int
    unmatched_predictions: int
    breakdown: dict[str, tuple[float, int]]  # prefix -> (accuracy, count)

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "overall": self.overall,
            "records": self.records,
            "matched": self.matched,
            "missing_predictions": self.missing_predictions,
            "unmatched_predictions": self.unmatched_predictions,
            "breakdown": {
                prefix: {"accuracy": acc, "count": count}
                for prefix, (acc, count) in self.breakdown.items()
            },
        }


def load_predictions(path) -> dict[tuple[str, str], str]:
    predictions: dict[tuple[str, str], str] = {}
    for line_no, obj in read_jsonl(path):
        key = (str(obj["image_id"]), str(obj["question"]))
        if key in predictions:
            raise DuplicatePredictionError(f"{path}:{line_no}: duplicate prediction for {key}")
        predictions[key] = str(obj["answer"])
    return predictions


def evaluate(dataset_path, predictions_path, metric: str = VQA_ACCURACY) -> EvalReport:
    """Score a predictions file against an assembled dataset.

    Records are joined on (image_id, question). Dataset records with no
    prediction score 0 and are counted, so a report cannot improve by omitting
    predictions; stray predictions are counted as unmatched.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    predictions = load_predictions(predictions_path)
    used: set[tuple[str, str]] = set()
    sums: Counter = Counter()
    counts: Counter = Counter()
    records = matched = missing = 0
    total = 0.0
    for _line_no, obj in read_jsonl(dataset_path):
        image_id, question = str(obj["image_id"]), str(obj["question"])
        answers = [str(a) for a in obj["answers"]]
        prediction = predictions.get((image_id, question))
        if prediction is None:
            score = 0.0
            missing += 1
        else:
            used.add((image_id, question))
            matched += 1
            if metric == VQA_ACCURACY:
                score = vqa_accuracy(prediction, answers)
            else:
                score = top1_accuracy(prediction, answers[0])
        prefix = question_prefix(question)
        sums[prefix] += score
        counts[prefix] += 1
        total += score
        records += 1
    breakdown = {p: (sums[p] / counts[p], counts[p]) for p in sorted(counts)}
    overall = total / records if records else 0.0
    return EvalReport(
        metric, overall, records, matched, missing, len(predictions) - len(used), breakdown
    )


@dataclass
class StatsReport:
    records: int
    prefix_counts: dict[str, int]
    prefix_distribution: dict[str, float]
    question_length_hist: dict[int, int]
    question_length_mean: float
    answer_length_hist: dict[int, int]
    answer_length_mean: float
    # prefix -> {"passed", "failed", "skipped", "ratio"}; None without a log
    filter_pass_ratios: dict[str, dict] | None = None

    def to_json(self) -> dict:
        out = {
            "records": self.records,
            "prefix_distribution": self.prefix_distribution,
            "prefix_counts": self.prefix_counts,
            "question_length": {
                "mean": self.question_length_mean,
                "histogram": {str(k): v for k, v in sorted(self.question_length_hist.items())},
            },
            "answer_length": {
                "mean": self.answer_length_mean,
                "histogram": {str(k): v for k, v in sorted(self.answer_length_hist.items())},
            },
        }
        if self.filter_pass_ratios is not None:
            out["filter_pass_ratios"] = self.filter_pass_ratios
        return out


def corpus_stats(dataset_path, filter_log_path=None) -> StatsReport:
    """Prefix distribution, word-length histograms and means; with a
    filter-decision log, per-prefix pass ratios.

    Answer length samples one answer per record (the first of its answer
    list), so both histograms carry exactly one unit of mass per record.
    Pass ratios count skipped decisions separately; ratio = passed / (passed
    + failed) over decisions that actually ran.
    """
    prefix_counts: Counter = Counter()
    question_hist: Counter = Counter()
    answer_hist: Counter = Counter()
    qsum = asum = records = 0
    for _line_no, obj in read_jsonl(dataset_path):
        question = str(obj["question"])
        if "answers" in obj:
            first_answer = str(obj["answers"][0]) if obj["answers"] else ""
        else:
            first_answer = str(obj.get("answer", ""))
        prefix_counts[question_prefix(question)] += 1
        qlen = len(question.split())
        alen = len(first_answer.split())
        question_hist[qlen] += 1
        answer_hist[alen] += 1
        qsum += qlen
        asum += alen
        records += 1
    distribution = {p: prefix_counts[p] / records for p in sorted(prefix_counts)} if records else {}
    ratios = None
    if filter_log_path is not None:
        buckets: dict[str, dict] = {}
        for _line_no, obj in read_jsonl(filter_log_path):
            prefix = question_prefix(str(obj["question"]))
            bucket = buckets.setdefault(prefix, {"passed": 0, "failed": 0, "skipped": 0})
            if obj.get("skipped", False):
                bucket["skipped"] += 1
            elif obj["passed"]:
                bucket["passed"] += 1
            else:
                bucket["failed"] += 1
        ratios = {}
        for prefix in sorted(buckets):
            b = buckets[prefix]
            ran = b["passed"] + b["failed"]
            ratios[prefix] = dict(b, ratio=(b["passed"] / ran) if ran else None)
    return StatsReport(
        records,
        dict(sorted(prefix_counts.items())),
        distribution,
        dict(question_hist),
        qsum / records if records else 0.0,
        dict(answer_hist),
        asum / records if records else 0.0,
        ratios,
    )
