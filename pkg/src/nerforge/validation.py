"""Input validation helpers for the estimator API.

These normalize the loose types users pass (lists of strings, plain
(start, end, type) tuples) into the internal data model with early, specific
errors, in the spirit of scikit-learn's check_array helpers.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .types import Document, EntitySpan, Sentence


def check_token_lists(X) -> list[tuple[str, ...]]:
    """Validate X as a sequence of non-empty token-string sequences."""
    if isinstance(X, str):
        raise ValueError("X must be a sequence of token sequences, not a single string")
    out = []
    for i, sent in enumerate(X):
        if isinstance(sent, str):
            raise ValueError(
                f"X[{i}] is a string; pass tokenized sentences (lists of tokens)"
            )
        words = tuple(sent)
        if not words:
            raise ValueError(f"X[{i}] is empty; sentences need at least one token")
        for tok in words:
            if not isinstance(tok, str) or not tok:
                raise ValueError(f"X[{i}] contains a non-string or empty token: {tok!r}")
        out.append(words)
    return out


def check_span_lists(y, X: Sequence[Sequence[str]]) -> list[frozenset[EntitySpan]]:
    """Validate y as per-sentence span collections aligned with X.

    Accepts EntitySpan instances or plain (start, end, type) triples.
    """
    if len(y) != len(X):
        raise ValueError(f"X has {len(X)} sentences but y has {len(y)} annotation sets")
    out = []
    for i, (words, spans) in enumerate(zip(X, y)):
        converted = set()
        for span in spans:
            if not isinstance(span, EntitySpan):
                try:
                    start, end, etype = span
                except (TypeError, ValueError):
                    raise ValueError(
                        f"y[{i}] contains {span!r}; spans are (start, end, type) triples"
                    ) from None
                span = EntitySpan(int(start), int(end), str(etype))
            if not 0 <= span.start < span.end <= len(words):
                raise ValueError(
                    f"y[{i}] span {span} out of range for a {len(words)}-token sentence"
                )
            converted.add(span)
        out.append(frozenset(converted))
    return out


def build_documents(
    X: Sequence[Sequence[str]],
    y: Sequence[Iterable[EntitySpan]],
    nested: bool = False,
    doc_id: str = "d0",
    corpus_id: str = "",
) -> list[Document]:
    """Pack validated (X, y) into a single document; raises if the span
    sets violate the flat (disjoint) or nested (non-crossing) invariant."""
    words_list = check_token_lists(X)
    span_sets = check_span_lists(y, words_list)
    sentences = []
    for words, spans in zip(words_list, span_sets):
        if nested:
            sentences.append(Sentence.make(words, nested=spans))
        else:
            sentences.append(Sentence.make(words, flat=spans))
    return [Document(id=doc_id, sentences=sentences, corpus_id=corpus_id)]
