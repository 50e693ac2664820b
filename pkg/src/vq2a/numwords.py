"""Small-number word handling shared by the stub backend and zero-count injection."""

from __future__ import annotations

_UNITS = {
    "zero": 0,
    "one": 1,
    "two": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
    "nine": 9,
    "ten": 10,
    "eleven": 11,
    "twelve": 12,
    "thirteen": 13,
    "fourteen": 14,
    "fifteen": 15,
    "sixteen": 16,
    "seventeen": 17,
    "eighteen": 18,
    "nineteen": 19,
    "twenty": 20,
}


def parse_number(token: str) -> int | None:
    """Integer value of a digit string or small number word, else None."""
    t = token.strip().lower()
    if t.isdigit():
        return int(t)
    return _UNITS.get(t)


def is_nonzero_number(text: str) -> bool:
    """True when `text` is a single digit string or number word other than zero."""
    value = parse_number(text)
    return value is not None and value != 0
