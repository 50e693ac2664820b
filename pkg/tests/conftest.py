from pathlib import Path

import pytest

from vq2a.corpus import AnnotatedCaption, Token, load_corpus, validate_caption

DATA = Path(__file__).parent / "data"


def build_caption(rows, *, text=None, image_id="img-1", caption_id="cap-1", split_hint=None):
    """Build a validated caption from (text, upos, head, deprel[, chunk_ids]) rows."""
    tokens = []
    for i, row in enumerate(rows):
        word, upos, head, deprel = row[:4]
        chunks = tuple(row[4]) if len(row) > 4 else ()
        tokens.append(Token(i, word, upos, head, deprel, chunks))
    caption = AnnotatedCaption(
        image_id,
        caption_id,
        text or " ".join(t.text for t in tokens),
        tuple(tokens),
        split_hint,
    )
    validate_caption(caption)
    return caption


@pytest.fixture(scope="session")
def bears_caption():
    captions = list(load_corpus(DATA / "bears.jsonl"))
    assert len(captions) == 1
    return captions[0]
