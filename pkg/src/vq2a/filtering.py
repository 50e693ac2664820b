"""Round-trip validation: answer normalisation, token-level F1, match decisions.

A generated question survives only if the QA backend's answer to it, read off
the caption, matches the original candidate above a token-F1 threshold.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass

from .genqa import answer_question

DEFAULT_THRESHOLD = 0.54
# comparison is strict ">" with a tiny slack so float noise at the threshold
# itself cannot flip a decision
EPSILON_EQ = 1e-9

_ARTICLES = frozenset({"a", "an", "the"})
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation, drop articles, split on whitespace."""
    tokens = text.lower().translate(_PUNCT_TABLE).split()
    return [t for t in tokens if t not in _ARTICLES]


def token_f1(a: str, b: str) -> float:
    """Token-level F1 over normalised token multisets; symmetric in (a, b).

    Both sides normalising to nothing counts as agreement (1.0); exactly one
    empty side, or zero overlap, scores 0.0.
    """
    ta, tb = normalize(a), normalize(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    overlap = sum((Counter(ta) & Counter(tb)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(ta)
    recall = overlap / len(tb)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MatchDecision:
    candidate: str
    validated_answer: str
    f1: float
    threshold: float
    passed: bool
    skipped_validation: bool = False


def decide(candidate: str, validated_answer: str, threshold: float = DEFAULT_THRESHOLD) -> MatchDecision:
    f1 = token_f1(candidate, validated_answer)
    return MatchDecision(candidate, validated_answer, f1, threshold, f1 > threshold - EPSILON_EQ)


def skip_decision(candidate: str, threshold: float = DEFAULT_THRESHOLD) -> MatchDecision:
    """Zero-count pairs pass by construction, without consulting the backend."""
    return MatchDecision(candidate, "", 0.0, threshold, True, skipped_validation=True)


def validate_pair(
    backend,
    caption: str,
    question: str,
    candidate_answer: str,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    zero_count: bool = False,
) -> MatchDecision:
    """Ask the backend to answer `question` over the caption and score the match.

    Backend failures propagate to the caller for retry; they never become a
    silent pass. An abstaining backend (empty answer) scores 0 and fails.
    """
    if zero_count:
        return skip_decision(candidate_answer, threshold)
    response = answer_question(backend, question, caption)
    return decide(candidate_answer, response.answer, threshold)


def decision_to_json(caption_id: str, question: str, decision: MatchDecision) -> dict:
    """Filter-decision log row, the input to the pass-ratio statistics."""
    return {
        "caption_id": caption_id,
        "answer": decision.candidate,
        "question": question,
        "validated_answer": decision.validated_answer,
        "f1": round(decision.f1, 6),
        "passed": decision.passed,
        "skipped": decision.skipped_validation,
    }
