"""Deterministic rule-based tokenization for plain-text requests.

Tokens split on whitespace, with leading and trailing punctuation peeled off
as separate tokens (interior punctuation like hyphens stays).  A sentence
ends after a terminal-punctuation token when the following token came after
whitespace and starts with an uppercase letter or a CJK ideograph.  No
abbreviation list; this is intentionally simple and reproducible.
"""

from __future__ import annotations

import unicodedata

from .types import Sentence

TERMINAL = {".", "!", "?", "…", "。", "！", "？"}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _is_ideograph(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x3400 <= cp <= 0x4DBF
        or 0x4E00 <= cp <= 0x9FFF
        or 0xF900 <= cp <= 0xFAFF
        or 0x20000 <= cp <= 0x2FA1F
    )


def _split_chunk(chunk: str) -> list[str]:
    leading = []
    while chunk and _is_punct(chunk[0]) and len(chunk) > 1:
        leading.append(chunk[0])
        chunk = chunk[1:]
    trailing = []
    while chunk and _is_punct(chunk[-1]) and len(chunk) > 1:
        trailing.append(chunk[-1])
        chunk = chunk[:-1]
    return leading + [chunk] + trailing[::-1]


def tokenize_plain(text: str) -> list[Sentence]:
    """Tokenize text into sentences of word/punctuation tokens."""
    # (token, preceded-by-whitespace) pairs
    tokens: list[tuple[str, bool]] = []
    for chunk in text.split():
        for i, tok in enumerate(_split_chunk(chunk)):
            tokens.append((tok, i == 0))
    sentences: list[Sentence] = []
    current: list[str] = []
    for i, (tok, _) in enumerate(tokens):
        current.append(tok)
        if tok in TERMINAL and i + 1 < len(tokens):
            nxt, ws = tokens[i + 1]
            first = nxt[0]
            if ws and (first.isupper() or _is_ideograph(first)):
                sentences.append(Sentence.make(current))
                current = []
    if current:
        sentences.append(Sentence.make(current))
    return sentences
