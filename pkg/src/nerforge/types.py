"""Core data model: tokens, sentences, documents, and entity spans.

Spans are half-open token intervals ``[start, end)``.  Flat annotation keeps
spans pairwise disjoint; nested annotation allows spans to contain each other
but never to cross (partially overlap).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class EntitySpan(NamedTuple):
    """A typed entity span over token indices, ``end`` exclusive."""

    start: int
    end: int
    etype: str

    @property
    def length(self) -> int:
        return self.end - self.start


class Token(NamedTuple):
    text: str
    index: int


def canonical_key(span: EntitySpan) -> tuple[int, int, str]:
    """Sort key ordering spans outer-to-inner: start asc, length desc, type asc."""
    return (span.start, span.start - span.end, span.etype)


def contains(outer: EntitySpan, inner: EntitySpan) -> bool:
    """Interval containment (non-strict)."""
    return outer.start <= inner.start and inner.end <= outer.end


def find_crossing(spans: Iterable[EntitySpan]) -> tuple[EntitySpan, EntitySpan] | None:
    """Return a pair of crossing (partially overlapping) spans, or None."""
    ordered = sorted(spans, key=canonical_key)
    # With this ordering a crossing can only occur between a span and a
    # predecessor that overlaps it without containing it.
    open_stack: list[EntitySpan] = []
    for span in ordered:
        while open_stack and open_stack[-1].end <= span.start:
            open_stack.pop()
        if open_stack and open_stack[-1].end < span.end:
            return (open_stack[-1], span)
        open_stack.append(span)
    return None


def find_overlap(spans: Iterable[EntitySpan]) -> tuple[EntitySpan, EntitySpan] | None:
    """Return a pair of overlapping spans, or None (flat-annotation check)."""
    ordered = sorted(spans, key=canonical_key)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            return (prev, cur)
    return None


def check_spans_in_range(spans: Iterable[EntitySpan], n_tokens: int) -> None:
    for span in spans:
        if not (0 <= span.start < span.end <= n_tokens):
            raise ValueError(
                f"span {span} out of range for sentence of {n_tokens} tokens"
            )
        if not span.etype or any(c.isspace() for c in span.etype) or "|" in span.etype:
            raise ValueError(f"invalid entity type {span.etype!r}")


def validate_token_text(text: str) -> None:
    if not text:
        raise ValueError("token text must be non-empty")
    if any(c in "\n\r\v\f  " for c in text):
        raise ValueError(f"token text contains vertical whitespace: {text!r}")


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence plus its flat and nested annotation.

    ``flat_spans`` are pairwise disjoint; ``nested_spans`` are pairwise
    non-crossing (any two are disjoint or one contains the other).
    """

    tokens: tuple[Token, ...]
    flat_spans: frozenset[EntitySpan] = frozenset()
    nested_spans: frozenset[EntitySpan] = frozenset()

    def __post_init__(self):
        for tok in self.tokens:
            validate_token_text(tok.text)
        n = len(self.tokens)
        check_spans_in_range(self.flat_spans, n)
        check_spans_in_range(self.nested_spans, n)
        bad = find_overlap(self.flat_spans)
        if bad is not None:
            raise ValueError(f"flat spans overlap: {bad[0]} / {bad[1]}")
        bad = find_crossing(self.nested_spans)
        if bad is not None:
            raise ValueError(f"nested spans cross: {bad[0]} / {bad[1]}")

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(tok.text for tok in self.tokens)

    @classmethod
    def make(
        cls,
        words: Iterable[str],
        flat: Iterable[EntitySpan] = (),
        nested: Iterable[EntitySpan] = (),
    ) -> "Sentence":
        tokens = tuple(Token(w, i) for i, w in enumerate(words))
        return cls(tokens, frozenset(flat), frozenset(nested))


@dataclass
class Document:
    """An ordered group of sentences with corpus provenance."""

    id: str
    sentences: list[Sentence] = field(default_factory=list)
    corpus_id: str = ""
    language: str = ""
