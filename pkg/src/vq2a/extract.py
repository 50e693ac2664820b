"""Candidate answer extraction from POS tags, dependency trees and NP chunks.

Four mechanisms produce candidates per caption: noun phrases, POS spans,
parse tree spans, and the injected boolean answers "yes"/"no". The same
surface reached by several mechanisms becomes one candidate carrying the
union of mechanisms.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import AnnotatedCaption, Span, make_span

NOUN_PHRASE = "noun_phrase"
POS_SPAN = "pos_span"
PARSE_TREE_SPAN = "parse_tree_span"
BOOLEAN = "boolean"
MECHANISMS = (NOUN_PHRASE, POS_SPAN, PARSE_TREE_SPAN, BOOLEAN)

OPEN_CLASS = frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV"})
# closed-class tags tolerated inside a POS span
_SPAN_INTERIOR = OPEN_CLASS | {"DET", "ADP", "CCONJ", "SCONJ"}
_NOMINAL = frozenset({"NOUN", "PROPN", "PRON", "NUM"})
_NP_MODIFIER_RELS = frozenset({"det", "amod", "nummod", "compound", "poss", "nmod"})
PARTICLE_DEPREL = "prt"
PARSE_TREE_MAX_TOKENS = 3


@dataclass(frozen=True)
class CandidateAnswer:
    answer: str
    mechanisms: frozenset[str]
    span: Span | None  # None for boolean candidates
    caption_id: str
    image_id: str


def extract_noun_phrases(caption: AnnotatedCaption) -> list[Span]:
    """NP spans: the explicit chunk annotations when present, otherwise a
    base-NP approximation from nominal heads and their left modifiers."""
    if any(t.np_chunks for t in caption.tokens):
        return caption.np_chunk_spans()
    toks = caption.tokens
    spans = []
    for tok in toks:
        if tok.upos not in _NOMINAL:
            continue
        head = toks[tok.head]
        # skip nominals absorbed into a larger NP ("two" in "two bears")
        if head.index != tok.index and head.upos in _NOMINAL and tok.deprel in _NP_MODIFIER_RELS:
            continue
        start = tok.index
        while start > 0:
            prev = toks[start - 1]
            if prev.head == tok.index and prev.deprel in _NP_MODIFIER_RELS:
                start -= 1
            else:
                break
        spans.append(make_span(caption, start, tok.index + 1))
    return spans


def extract_pos_spans(caption: AnnotatedCaption) -> list[Span]:
    """Contiguous spans that start and end on content words.

    A span must (a) start on an open-class token, (b) end on an open-class
    token or a verb particle (deprel "prt"), and (c) contain only open-class
    or DET/ADP/CCONJ/SCONJ tokens in between. Every qualifying sub-sequence is
    emitted, not only maximal ones. A lone cardinal (upos NUM) also qualifies,
    keeping counts available as standalone answers without licensing spans
    that merely start on a number.
    """
    toks = caption.tokens
    spans = []
    for start, first in enumerate(toks):
        if first.upos == "NUM":
            spans.append(make_span(caption, start, start + 1))
            continue
        if first.upos not in OPEN_CLASS:
            continue
        for end in range(start + 1, len(toks) + 1):
            last = toks[end - 1]
            if last.upos in OPEN_CLASS or last.deprel == PARTICLE_DEPREL:
                spans.append(make_span(caption, start, end))
            if last.upos not in _SPAN_INTERIOR:
                break
    return spans


def extract_parse_tree_spans(caption: AnnotatedCaption) -> list[Span]:
    """Dependency subtrees covering a contiguous range of at most 3 tokens with
    at least one open-class token; spans contained in another kept span are
    dropped, and gapped (non-projective) subtrees are skipped."""
    toks = caption.tokens
    children: list[list[int]] = [[] for _ in toks]
    for tok in toks:
        if not tok.is_root:
            children[tok.head].append(tok.index)
    kept: set[tuple[int, int]] = set()
    for tok in toks:
        nodes = []
        stack = [tok.index]
        while stack:
            cur = stack.pop()
            nodes.append(cur)
            stack.extend(children[cur])
        lo, hi = min(nodes), max(nodes)
        if hi - lo + 1 != len(nodes):
            continue
        if len(nodes) > PARSE_TREE_MAX_TOKENS:
            continue
        if not any(toks[i].upos in OPEN_CLASS for i in nodes):
            continue
        kept.add((lo, hi + 1))
    maximal = [
        (s, e)
        for (s, e) in sorted(kept)
        if not any((s2 <= s and e <= e2) and (s2, e2) != (s, e) for (s2, e2) in kept)
    ]
    return [make_span(caption, s, e) for s, e in maximal]


def extract_candidates(caption: AnnotatedCaption, include_boolean: bool = True) -> list[CandidateAnswer]:
    """Union of all mechanisms, deduplicated by case-sensitive surface.

    Duplicate surfaces keep the earliest/shortest span and merge their
    mechanism sets. Output is ordered by (span start, span length, answer)
    with boolean candidates last; it depends only on the caption.
    """
    by_surface: dict[str, dict] = {}
    for mechanism, spans in (
        (NOUN_PHRASE, extract_noun_phrases(caption)),
        (POS_SPAN, extract_pos_spans(caption)),
        (PARSE_TREE_SPAN, extract_parse_tree_spans(caption)),
    ):
        for span in spans:
            entry = by_surface.setdefault(span.surface, {"mechanisms": set(), "span": span})
            entry["mechanisms"].add(mechanism)
            if (span.start, len(span)) < (entry["span"].start, len(entry["span"])):
                entry["span"] = span
    candidates = [
        CandidateAnswer(surface, frozenset(e["mechanisms"]), e["span"], caption.caption_id, caption.image_id)
        for surface, e in by_surface.items()
    ]
    candidates.sort(key=lambda c: (c.span.start, len(c.span), c.answer))
    if include_boolean:
        for word in ("no", "yes"):
            candidates.append(
                CandidateAnswer(word, frozenset({BOOLEAN}), None, caption.caption_id, caption.image_id)
            )
    return candidates


def candidate_to_json(candidate: CandidateAnswer) -> dict:
    return {
        "image_id": candidate.image_id,
        "caption_id": candidate.caption_id,
        "answer": candidate.answer,
        "mechanisms": sorted(candidate.mechanisms),
        "span": None
        if candidate.span is None
        else {"start": candidate.span.start, "end": candidate.span.end},
    }
