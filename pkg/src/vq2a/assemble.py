"""Dataset assembly: zero-count injection, vocabulary filtering, split
assignment and 10-slot answer targets."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .numwords import is_nonzero_number

ANSWER_TARGET_SIZE = 10

PROVENANCE_GENERATED = "generated"
PROVENANCE_ZERO_COUNT = "zero_count_injected"
STATUS_GENERATED = "generated"
STATUS_VALIDATED = "validated"
STATUS_REJECTED = "rejected"
SPLITS = ("train", "dev")

_HOW_MANY = "how many"


@dataclass(frozen=True)
class QATriplet:
    image_id: str
    question: str
    answer: str
    source_caption_id: str
    provenance: str = PROVENANCE_GENERATED
    status: str = STATUS_VALIDATED
    split_hint: str | None = None


@dataclass(frozen=True)
class DatasetRecord:
    image_id: str
    question: str
    answers: tuple[str, ...]  # 10 slots for dev records, 1 for train
    split: str
    provenance: str


class SplitAssignmentError(ValueError):
    """A triplet's image has no split under strict assignment."""


def default_answer_preprocess(answer: str) -> str:
    return answer.strip().lower()


class AnswerVocabulary:
    """Closed answer set; membership is exact string match after the
    vocabulary's own preprocessing (lowercase + trim by default)."""

    def __init__(
        self,
        answers: Iterable[str],
        name: str = "vocab",
        preprocess: Callable[[str], str] = default_answer_preprocess,
    ):
        self.name = name
        self.preprocess = preprocess
        seen: dict[str, None] = {}
        for answer in answers:
            key = preprocess(answer)
            if key and key not in seen:
                seen[key] = None
        self.answers: tuple[str, ...] = tuple(seen)
        if not self.answers:
            raise ValueError("vocabulary is empty")
        self._members = frozenset(self.answers)

    def __len__(self) -> int:
        return len(self.answers)

    def __contains__(self, answer: str) -> bool:
        return self.preprocess(answer) in self._members

    @classmethod
    def load(cls, path, name: str | None = None, preprocess=default_answer_preprocess):
        with open(path, encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
        return cls(
            (line for line in lines if line.strip()),
            name=name or Path(path).stem,
            preprocess=preprocess,
        )


def zero_count_pool(triplets: Sequence[QATriplet]) -> list[QATriplet]:
    """Validated counting questions usable as zero-count donors: question
    starts with "how many" and the answer is a nonzero number word or digit."""
    return [
        t
        for t in triplets
        if t.question.lower().startswith(_HOW_MANY) and is_nonzero_number(t.answer)
    ]


def inject_zero_count(
    validated: Sequence[QATriplet],
    rng_seed: int,
    rate: float,
    zero_answer: str = "zero",
) -> list[QATriplet]:
    """Attach counting questions from other captions with the answer changed
    to zero.

    Each caption is selected with probability `rate`; a selected caption draws
    one pool question uniformly from donors on a different caption. Injected
    triplets are validated by construction (no round trip). Deterministic for
    a fixed seed and input order.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be within [0, 1]")
    out = list(validated)
    pool = zero_count_pool(validated)
    rng = random.Random(rng_seed)
    captions: dict[str, tuple[str, str | None]] = {}
    for t in validated:
        captions.setdefault(t.source_caption_id, (t.image_id, t.split_hint))
    for caption_id, (image_id, split_hint) in captions.items():
        if rng.random() >= rate:
            continue
        eligible = [p for p in pool if p.source_caption_id != caption_id]
        if not eligible:
            continue
        donor = eligible[rng.randrange(len(eligible))]
        out.append(
            QATriplet(
                image_id,
                donor.question,
                zero_answer,
                caption_id,
                provenance=PROVENANCE_ZERO_COUNT,
                status=STATUS_VALIDATED,
                split_hint=split_hint,
            )
        )
    return out


def restrict_to_vocabulary(
    triplets: Sequence[QATriplet], vocab: AnswerVocabulary
) -> tuple[list[QATriplet], int]:
    """Keep triplets whose answer is in the vocabulary; report the drop count."""
    kept = [t for t in triplets if t.answer in vocab]
    return kept, len(triplets) - len(kept)


def _answer_sort_key(answer: str):
    return (len(answer.split()), len(answer), answer)


def build_answer_target(seed_answers: Sequence[str]) -> list[str]:
    """10-slot answer list from the distinct seed answers.

    Seeds are sorted shortest-first (token count, then character count, then
    lexicographic), truncated to 10, or cyclically replicated one-by-one until
    the list holds 10 entries.
    """
    if not seed_answers:
        raise ValueError("seed_answers must be non-empty")
    unique = sorted(dict.fromkeys(seed_answers), key=_answer_sort_key)
    if len(unique) >= ANSWER_TARGET_SIZE:
        return unique[:ANSWER_TARGET_SIZE]
    out = list(unique)
    i = 0
    while len(out) < ANSWER_TARGET_SIZE:
        out.append(unique[i % len(unique)])
        i += 1
    return out


def assign_splits(
    triplets: Sequence[QATriplet],
    manifest: Mapping[str, str] | None,
    *,
    strict: bool = True,
) -> tuple[dict[str, list[QATriplet]], int]:
    """Label triplets train/dev by their image.

    With a manifest the image must be listed; without one the triplets' own
    split hints are used. Unassignable triplets raise (strict) or are dropped
    and counted.
    """
    by_split: dict[str, list[QATriplet]] = {"train": [], "dev": []}
    unknown: list[str] = []
    for t in triplets:
        split = manifest.get(t.image_id) if manifest is not None else t.split_hint
        if split not in SPLITS:
            unknown.append(t.image_id)
            continue
        by_split[split].append(t)
    if unknown and strict:
        ids = ", ".join(sorted(set(unknown))[:10])
        raise SplitAssignmentError(
            f"{len(unknown)} triplets on images without a train/dev split: {ids}"
        )
    return by_split, len(unknown)


def group_dev_targets(dev_triplets: Sequence[QATriplet]) -> list[DatasetRecord]:
    """One record per unique (image, question) pair with a 10-slot target
    pooled from the pair's answers."""
    groups: dict[tuple[str, str], list[QATriplet]] = {}
    for t in dev_triplets:
        groups.setdefault((t.image_id, t.question), []).append(t)
    records = []
    for (image_id, question), members in groups.items():
        target = build_answer_target([m.answer for m in members])
        provenances = sorted({m.provenance for m in members})
        provenance = provenances[0] if len(provenances) == 1 else "mixed"
        records.append(DatasetRecord(image_id, question, tuple(target), "dev", provenance))
    return records


def train_records(train_triplets: Sequence[QATriplet]) -> list[DatasetRecord]:
    return [
        DatasetRecord(t.image_id, t.question, (t.answer,), "train", t.provenance)
        for t in train_triplets
    ]


# --- file formats ---------------------------------------------------------------


def triplet_to_json(t: QATriplet) -> dict:
    rec = {
        "image_id": t.image_id,
        "caption_id": t.source_caption_id,
        "question": t.question,
        "answer": t.answer,
        "provenance": t.provenance,
        "status": t.status,
    }
    if t.split_hint is not None:
        rec["split_hint"] = t.split_hint
    return rec


def triplet_from_json(obj: dict) -> QATriplet:
    return QATriplet(
        str(obj["image_id"]),
        str(obj["question"]),
        str(obj["answer"]),
        str(obj["caption_id"]),
        provenance=str(obj.get("provenance", PROVENANCE_GENERATED)),
        status=str(obj.get("status", STATUS_VALIDATED)),
        split_hint=obj.get("split_hint"),
    )


def record_to_json(record: DatasetRecord) -> dict:
    return {
        "image_id": record.image_id,
        "question": record.question,
        "answers": list(record.answers),
        "provenance": record.provenance,
    }


def load_split_manifest(path) -> dict[str, str]:
    """Read an image->split map from a two-column TSV or a JSONL file."""
    manifest: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("{"):
                obj = json.loads(line)
                image_id, split = str(obj["image_id"]), str(obj["split"])
            else:
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{line_no}: expected 'image_id<TAB>split'")
                image_id, split = parts[0], parts[1]
            if split not in SPLITS:
                raise ValueError(f"{path}:{line_no}: unknown split {split!r}")
            manifest[image_id] = split
    return manifest
