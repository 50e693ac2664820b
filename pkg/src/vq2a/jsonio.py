"""JSONL reading and atomic file writing shared by the pipeline stages."""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator


class MalformedLineError(ValueError):
    """A line of a JSONL input could not be parsed at all."""

    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


def read_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, object) for every non-blank line of a JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(path, line_no, f"invalid JSON: {exc.msg}")
            if not isinstance(obj, dict):
                raise MalformedLineError(path, line_no, "expected a JSON object")
            yield line_no, obj


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


@contextmanager
def atomic_writer(path):
    """Write to a temp file in the target directory, then rename into place.

    The final path appears only if the writer body completes; a failure mid-way
    leaves any previous file at `path` untouched.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_jsonl(path, rows: Iterable[dict]) -> int:
    """Atomically write `rows` as JSONL; returns the number of lines written."""
    n = 0
    with atomic_writer(path) as fh:
        for row in rows:
            fh.write(dumps(row))
            fh.write("\n")
            n += 1
    return n


def write_tsv(path, header: Iterable[str], rows: Iterable[Iterable]) -> int:
    """Atomically write a tab-separated table with a header line."""
    n = 0
    with atomic_writer(path) as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(cell) for cell in row) + "\n")
            n += 1
    return n
