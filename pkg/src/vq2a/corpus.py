"""Annotated caption corpus: domain records, JSONL / CoNLL-U loading, quarantine.

Captions arrive pre-parsed (tokens with UPOS tags, dependency heads and
relations, optional NP chunk ids); nothing here runs a tagger or parser.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .jsonio import MalformedLineError, read_jsonl, write_jsonl

ROOT_SENTINEL = -1

JSONL_EMBEDDED = "jsonl_embedded"
JSONL_PLUS_CONLLU = "jsonl_plus_conllu"
FORMATS = (JSONL_EMBEDDED, JSONL_PLUS_CONLLU)

_REQUIRED_FIELDS = ("image_id", "caption_id", "text", "tokens")


class CaptionValidationError(ValueError):
    """A record violates a caption invariant and must be quarantined."""


@dataclass(frozen=True)
class Token:
    """One token of a parsed caption.

    `head` is the index of the dependency head; the root token points at
    itself (a -1 on input is normalised to that at load time). `np_chunks`
    lists the ids of every NP chunk the token belongs to; chunks may nest,
    so a token can be a member of more than one.
    """

    index: int
    text: str
    upos: str
    head: int
    deprel: str
    np_chunks: tuple[int, ...] = ()

    @property
    def is_root(self) -> bool:
        return self.head == self.index or self.head == ROOT_SENTINEL

    @property
    def is_np_chunk_member(self) -> bool:
        return bool(self.np_chunks)


@dataclass(frozen=True)
class Span:
    """Half-open token range [start, end) with its detokenised surface."""

    start: int
    end: int
    surface: str

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class AnnotatedCaption:
    image_id: str
    caption_id: str
    text: str
    tokens: tuple[Token, ...]
    split_hint: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def np_chunk_spans(self) -> list[Span]:
        """Explicit NP chunk annotations as spans, ordered by (start, end)."""
        groups: dict[int, list[int]] = {}
        for tok in self.tokens:
            for cid in tok.np_chunks:
                groups.setdefault(cid, []).append(tok.index)
        spans = []
        for cid, idxs in groups.items():
            lo, hi = min(idxs), max(idxs)
            if hi - lo + 1 != len(idxs):
                raise CaptionValidationError(f"np chunk {cid} covers a non-contiguous range")
            spans.append(make_span(self, lo, hi + 1))
        spans.sort(key=lambda s: (s.start, s.end))
        return spans


def detokenize(caption: AnnotatedCaption, span) -> str:
    """Surface text of a Span or (start, end) pair, single-space joined."""
    start, end = (span.start, span.end) if isinstance(span, Span) else span
    if not (0 <= start < end <= len(caption.tokens)):
        raise ValueError(
            f"span ({start}, {end}) out of range for {len(caption.tokens)} tokens"
        )
    return " ".join(t.text for t in caption.tokens[start:end])


def make_span(caption: AnnotatedCaption, start: int, end: int) -> Span:
    return Span(start, end, detokenize(caption, (start, end)))


def validate_caption(caption: AnnotatedCaption) -> None:
    """Raise CaptionValidationError on any invariant violation."""
    toks = caption.tokens
    if not toks:
        raise CaptionValidationError("caption has no tokens")
    n = len(toks)
    for pos, tok in enumerate(toks):
        if tok.index != pos:
            raise CaptionValidationError("token indices must run 0..n-1 in order")
        if not tok.text:
            raise CaptionValidationError(f"token {pos} has empty text")
        if not (tok.head == ROOT_SENTINEL or 0 <= tok.head < n):
            raise CaptionValidationError(f"token {pos} head {tok.head} out of range")
    roots = [t.index for t in toks if t.is_root]
    if len(roots) != 1:
        raise CaptionValidationError(f"expected exactly one root, found {len(roots)}")
    for tok in toks:
        cur, steps = tok, 0
        while not cur.is_root:
            cur = toks[cur.head]
            steps += 1
            if steps > n:
                raise CaptionValidationError("dependency heads contain a cycle")
    # whitespace-insensitive: token texts concatenated must reproduce the text
    if "".join(caption.text.split()) != "".join("".join(t.text.split()) for t in toks):
        raise CaptionValidationError("token texts do not reproduce the caption text")
    caption.np_chunk_spans()  # contiguity check


# --- JSONL (embedded annotations) ------------------------------------------


def _token_from_json(obj, pos: int) -> Token:
    if not isinstance(obj, dict):
        raise CaptionValidationError(f"token {pos} is not an object")
    try:
        index = int(obj["i"])
        text = str(obj["text"])
        upos = str(obj["upos"])
        head = int(obj["head"])
        deprel = str(obj["deprel"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CaptionValidationError(f"token {pos} is missing or mistypes a field ({exc})")
    chunk = obj.get("np_chunk")
    if chunk is None:
        chunks: tuple[int, ...] = ()
    elif isinstance(chunk, list):
        chunks = tuple(int(c) for c in chunk)
    else:
        chunks = (int(chunk),)
    if head == ROOT_SENTINEL:
        head = index
    return Token(index, text, upos, head, deprel, chunks)


def caption_from_json(obj: dict) -> AnnotatedCaption:
    missing = [k for k in _REQUIRED_FIELDS if k not in obj]
    if missing:
        raise CaptionValidationError(f"missing fields: {', '.join(missing)}")
    if not isinstance(obj["tokens"], list):
        raise CaptionValidationError("tokens must be an array")
    tokens = tuple(_token_from_json(t, pos) for pos, t in enumerate(obj["tokens"]))
    split_hint = obj.get("split_hint")
    cap = AnnotatedCaption(
        str(obj["image_id"]),
        str(obj["caption_id"]),
        str(obj["text"]),
        tokens,
        None if split_hint is None else str(split_hint),
    )
    validate_caption(cap)
    return cap


def caption_to_json(caption: AnnotatedCaption) -> dict:
    rec = {
        "image_id": caption.image_id,
        "caption_id": caption.caption_id,
        "text": caption.text,
        "tokens": [
            {
                "i": t.index,
                "text": t.text,
                "upos": t.upos,
                "head": t.head,
                "deprel": t.deprel,
                "np_chunk": list(t.np_chunks) if t.np_chunks else None,
            }
            for t in caption.tokens
        ],
    }
    if caption.split_hint is not None:
        rec["split_hint"] = caption.split_hint
    return rec


# --- CoNLL-U sidecar ---------------------------------------------------------


def parse_conllu_file(path) -> dict[str, tuple[str | None, tuple[Token, ...]]]:
    """Parse a CoNLL-U file into {sent_id: (text, tokens)}.

    Multiword-token ranges and empty nodes are skipped. NP chunk membership is
    read from a `Chunk=NP` entry in the MISC column; consecutive member tokens
    form one chunk.
    """
    sentences: dict[str, tuple[str | None, tuple[Token, ...]]] = {}
    sent_id: str | None = None
    text: str | None = None
    rows: list[list[str]] = []

    def flush():
        nonlocal sent_id, text, rows
        if rows:
            if sent_id is None:
                raise MalformedLineError(path, 0, "sentence without a sent_id comment")
            sentences[sent_id] = (text, _tokens_from_conllu_rows(rows))
        sent_id, text, rows = None, None, []

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("sent_id"):
                    sent_id = body.split("=", 1)[1].strip()
                elif body.startswith("text"):
                    text = body.split("=", 1)[1].strip()
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise MalformedLineError(path, line_no, "expected 10 tab-separated columns")
            if "-" in cols[0] or "." in cols[0]:
                continue
            rows.append(cols)
    flush()
    return sentences


def _tokens_from_conllu_rows(rows: list[list[str]]) -> tuple[Token, ...]:
    members = []
    for cols in rows:
        misc = cols[9]
        member = misc != "_" and any(
            part.split("=", 1)[0] == "Chunk" and part.split("=", 1)[1].startswith("NP")
            for part in misc.split("|")
            if "=" in part
        )
        members.append(member)
    # consecutive members form chunks numbered left to right
    chunk_ids: list[tuple[int, ...]] = []
    current = -1
    for pos, member in enumerate(members):
        if member and (pos == 0 or not members[pos - 1]):
            current += 1
        chunk_ids.append((current,) if member else ())
    tokens = []
    for pos, cols in enumerate(rows):
        try:
            index = int(cols[0]) - 1
            head1 = int(cols[6])
        except ValueError as exc:
            raise CaptionValidationError(f"bad CoNLL-U numeric field: {exc}")
        head = index if head1 == 0 else head1 - 1
        tokens.append(Token(index, cols[1], cols[3], head, cols[7], chunk_ids[pos]))
    return tuple(tokens)


def _caption_from_conllu_ref(obj: dict, base_dir: Path, cache: dict) -> AnnotatedCaption:
    for key in ("image_id", "caption_id", "conllu_ref"):
        if key not in obj:
            raise CaptionValidationError(f"missing fields: {key}")
    ref = str(obj["conllu_ref"])
    if "#" not in ref:
        raise CaptionValidationError("conllu_ref must look like 'file.conllu#sent_id'")
    rel, sent_id = ref.split("#", 1)
    fpath = base_dir / rel
    if fpath not in cache:
        cache[fpath] = parse_conllu_file(fpath)
    sent = cache[fpath].get(sent_id)
    if sent is None:
        raise CaptionValidationError(f"sentence {sent_id!r} not found in {rel}")
    text, tokens = sent
    split_hint = obj.get("split_hint")
    cap = AnnotatedCaption(
        str(obj["image_id"]),
        str(obj["caption_id"]),
        text if text is not None else " ".join(t.text for t in tokens),
        tokens,
        None if split_hint is None else str(split_hint),
    )
    validate_caption(cap)
    return cap


# --- loading -----------------------------------------------------------------


@dataclass(frozen=True)
class QuarantineRecord:
    """A rejected input record: kept out of the stream, never silently lost."""

    line_no: int
    reason: str
    raw: dict


def load_corpus(
    path,
    fmt: str = JSONL_EMBEDDED,
    *,
    quarantine: Callable[[QuarantineRecord], None] | None = None,
) -> Iterator[AnnotatedCaption]:
    """Stream validated captions from a corpus file in file order.

    Records violating caption invariants (bad heads, cycles, duplicate ids,
    text/token mismatches) go to the `quarantine` sink and processing
    continues; lines that are not JSON objects raise MalformedLineError.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    conllu_cache: dict = {}
    seen: set[tuple[str, str]] = set()
    for line_no, obj in read_jsonl(path):
        try:
            if fmt == JSONL_EMBEDDED:
                cap = caption_from_json(obj)
            else:
                cap = _caption_from_conllu_ref(obj, path.parent, conllu_cache)
            key = (cap.image_id, cap.caption_id)
            if key in seen:
                raise CaptionValidationError(f"duplicate (image_id, caption_id) {key}")
            seen.add(key)
        except CaptionValidationError as exc:
            if quarantine is not None:
                quarantine(QuarantineRecord(line_no, str(exc), obj))
            continue
        yield cap


def write_corpus(captions: Iterable[AnnotatedCaption], path) -> int:
    return write_jsonl(path, (caption_to_json(c) for c in captions))
