"""Deterministic synthetic corpus generator for end-to-end pipeline runs."""

import json
import random

ANIMALS = ["bears", "dogs", "cats", "birds", "horses", "ducks", "goats", "foxes"]
SINGULAR = ["bear", "dog", "cat", "bird", "horse", "duck", "goat", "fox"]
VERBS = ["laying", "sitting", "standing", "sleeping", "resting", "playing", "walking", "grazing"]
PLACES = ["ice", "grass", "beach", "roof", "snow", "dock", "field", "porch"]
NUMBERS = ["two", "three", "four", "five", "six", "seven", "eight", "nine"]
ADJECTIVES = ["red", "old", "small", "big", "lazy", "young", "wet", "brown"]


def _tok(i, text, upos, head, deprel, chunk=None):
    return {"i": i, "text": text, "upos": upos, "head": head, "deprel": deprel, "np_chunk": chunk}


def _t1(num, animals, verb, place):
    """"<num> <animals> are <verb> down on the <place>" with nested NP chunks."""
    return [
        _tok(0, num, "NUM", 1, "nummod", [0, 1]),
        _tok(1, animals, "NOUN", 3, "nsubj", [1]),
        _tok(2, "are", "AUX", 3, "aux"),
        _tok(3, verb, "VERB", 3, "ROOT"),
        _tok(4, "down", "PART", 3, "prt"),
        _tok(5, "on", "ADP", 3, "prep"),
        _tok(6, "the", "DET", 7, "det", [2]),
        _tok(7, place, "NOUN", 5, "pobj", [2]),
    ]


def _t2(adj, animal, verb, place):
    """"a <adj> <animal> is <verb> on the <place>"."""
    return [
        _tok(0, "a", "DET", 2, "det", [0]),
        _tok(1, adj, "ADJ", 2, "amod", [0]),
        _tok(2, animal, "NOUN", 4, "nsubj", [0]),
        _tok(3, "is", "AUX", 4, "aux"),
        _tok(4, verb, "VERB", 4, "ROOT"),
        _tok(5, "on", "ADP", 4, "prep"),
        _tok(6, "the", "DET", 7, "det", [1]),
        _tok(7, place, "NOUN", 5, "pobj", [1]),
    ]


def _t3(animals, verb, place):
    """"<animals> are <verb> near the <place>"."""
    return [
        _tok(0, animals, "NOUN", 2, "nsubj", [0]),
        _tok(1, "are", "AUX", 2, "aux"),
        _tok(2, verb, "VERB", 2, "ROOT"),
        _tok(3, "near", "ADP", 2, "prep"),
        _tok(4, "the", "DET", 5, "det", [1]),
        _tok(5, place, "NOUN", 3, "pobj", [1]),
    ]


def make_captions(n=1000, seed=123):
    rng = random.Random(seed)
    captions = []
    for i in range(n):
        template = rng.random()
        if template < 0.5:
            tokens = _t1(
                rng.choice(NUMBERS), rng.choice(ANIMALS), rng.choice(VERBS), rng.choice(PLACES)
            )
        elif template < 0.75:
            tokens = _t2(
                rng.choice(ADJECTIVES), rng.choice(SINGULAR), rng.choice(VERBS), rng.choice(PLACES)
            )
        else:
            tokens = _t3(rng.choice(ANIMALS), rng.choice(VERBS), rng.choice(PLACES))
        captions.append(
            {
                "image_id": f"img-{i // 2:05d}",
                "caption_id": f"cap-{i:05d}",
                "text": " ".join(t["text"] for t in tokens),
                "tokens": tokens,
            }
        )
    return captions


def bad_records(first_good):
    """Eight records that must each land in quarantine."""
    plain = [_tok(0, "dogs", "NOUN", 1, "nsubj"), _tok(1, "bark", "VERB", 1, "ROOT")]
    return [
        {  # head out of range
            "image_id": "bad-1", "caption_id": "badcap-1", "text": "dogs bark",
            "tokens": [_tok(0, "dogs", "NOUN", 7, "nsubj"), _tok(1, "bark", "VERB", 1, "ROOT")],
        },
        {  # cycle below the root
            "image_id": "bad-2", "caption_id": "badcap-2", "text": "dogs bark loudly",
            "tokens": [
                _tok(0, "dogs", "NOUN", 0, "ROOT"),
                _tok(1, "bark", "VERB", 2, "dep"),
                _tok(2, "loudly", "ADV", 1, "dep"),
            ],
        },
        {  # no root
            "image_id": "bad-3", "caption_id": "badcap-3", "text": "dogs bark",
            "tokens": [_tok(0, "dogs", "NOUN", 1, "nsubj"), _tok(1, "bark", "VERB", 0, "dep")],
        },
        {  # two roots
            "image_id": "bad-4", "caption_id": "badcap-4", "text": "dogs bark",
            "tokens": [_tok(0, "dogs", "NOUN", 0, "ROOT"), _tok(1, "bark", "VERB", 1, "ROOT")],
        },
        {  # empty token list
            "image_id": "bad-5", "caption_id": "badcap-5", "text": "dogs bark", "tokens": [],
        },
        {  # token texts do not reproduce the text
            "image_id": "bad-6", "caption_id": "badcap-6", "text": "completely different words",
            "tokens": plain,
        },
        {  # missing required field
            "image_id": "bad-7", "caption_id": "badcap-7", "tokens": plain,
        },
        dict(first_good),  # duplicate (image_id, caption_id)
    ]


def write_corpus_file(path, n=1000, seed=123, with_bad=True):
    captions = make_captions(n, seed)
    rows = list(captions)
    bad = bad_records(captions[0]) if with_bad else []
    rows.extend(bad)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return len(captions), len(bad)


def write_manifest(path, n=1000):
    images = sorted({f"img-{i // 2:05d}" for i in range(n)})
    with open(path, "w", encoding="utf-8") as fh:
        for k, image_id in enumerate(images):
            split = "dev" if k % 5 == 0 else "train"
            fh.write(f"{image_id}\t{split}\n")
    return images


def write_vocab(path):
    """Covers most but deliberately not all candidate surfaces, so the
    vocabulary restriction always drops something."""
    words = (
        NUMBERS
        + ANIMALS
        + SINGULAR
        + VERBS
        + PLACES
        + [f"{v} down" for v in VERBS]
        + [f"the {p}" for p in PLACES]
        + [f"on the {p}" for p in PLACES[:4]]
        + [f"near the {p}" for p in PLACES[:4]]
        + ["yes", "no", "zero"]
    )
    with open(path, "w", encoding="utf-8") as fh:
        for word in words:
            fh.write(word + "\n")
    return words
