"""Readers and writers for columnar annotation files, plus harmonization.

Flat format: one token per line, whitespace- or tab-separated columns, blank
line between sentences, ``-DOCSTART-`` in the first column starts a new
document (consumed, never a token).  Labels are ``O`` or ``B-X``/``I-X``;
both IOB1 and BIO files decode correctly because decoding goes through the
repairing BIO codec.

Nested format: ``token<TAB>ann`` where ``ann`` is ``O`` or ``|``-joined BIO
labels ordered outer-to-inner -- exactly the linearized decoder target, so
corpus files double as decoder fixtures.

All I/O is UTF-8 with LF line endings; no unicode normalization is applied.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .codec import bio_to_spans, delinearize, linearize, spans_to_bio
from .types import Document, EntitySpan, Sentence, contains


class ParseError(ValueError):
    pass


DOCSTART = "-DOCSTART-"


def _finish_sentence(words, labels, sentences, decode_flat):
    if not words:
        return
    if decode_flat:
        spans = bio_to_spans(labels)
        sentences.append(Sentence.make(words, flat=spans))
    else:
        sentences.append(Sentence.make(words))
    words.clear()
    labels.clear()


def parse_flat_conll(
    text: str,
    token_column: int = 0,
    label_column: int = -1,
    corpus_id: str = "",
    language: str = "",
) -> list[Document]:
    """Parse flat columnar annotation into documents.

    ``label_column`` may be negative (counted from the right).  Every
    non-blank line must have enough columns to address both requested
    columns; labels must be ``O`` or ``B-``/``I-`` plus a type.
    """
    documents: list[Document] = []
    sentences: list[Sentence] = []
    words: list[str] = []
    labels: list[str] = []

    def finish_document():
        _finish_sentence(words, labels, sentences, True)
        if sentences:
            documents.append(
                Document(
                    id=f"d{len(documents)}",
                    sentences=list(sentences),
                    corpus_id=corpus_id,
                    language=language,
                )
            )
            sentences.clear()

    n_columns = max(
        token_column + 1,
        label_column + 1 if label_column >= 0 else -label_column,
        2,  # token and label always live in distinct columns
    )
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            _finish_sentence(words, labels, sentences, True)
            continue
        cols = line.split()
        if cols[0] == DOCSTART:
            finish_document()
            continue
        if len(cols) < n_columns:
            raise ParseError(
                f"line {lineno}: expected at least {n_columns} columns, got {len(cols)}"
            )
        token = cols[token_column]
        label = cols[label_column]
        if label != "O" and not (
            len(label) > 2 and label[1] == "-" and label[0] in "BI"
        ):
            raise ParseError(f"line {lineno}: unknown label prefix in {label!r}")
        words.append(token)
        labels.append(label)
    finish_document()
    return documents


def write_flat_conll(
    doc: Document, column_order: Sequence[str] = ("token", "label")
) -> str:
    """Serialize a document so that ``parse_flat_conll`` inverts it.

    ``column_order`` names the emitted columns, any order of ``token`` and
    ``label``; columns are tab-separated and every sentence ends with a
    blank line.
    """
    unknown = set(column_order) - {"token", "label"}
    if unknown or len(column_order) != len(set(column_order)):
        raise ValueError(f"column_order must be a permutation over token/label, got {column_order!r}")
    lines: list[str] = []
    for sentence in doc.sentences:
        labels = spans_to_bio(len(sentence.tokens), sentence.flat_spans)
        for token, label in zip(sentence.words, labels):
            fields = {"token": token, "label": label}
            lines.append("\t".join(fields[c] for c in column_order))
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_conll_tokens(text: str) -> list[Sentence]:
    """Lenient reader for pre-tokenized, unlabeled columnar input.

    Only the first column is used; labels, if present, are ignored.  Used
    for prediction input, where no gold annotation exists.
    """
    sentences: list[Sentence] = []
    words: list[str] = []
    for line in text.split("\n"):
        cols = line.split()
        if not cols:
            if words:
                sentences.append(Sentence.make(words))
                words = []
            continue
        token = line.split("\t")[0].split()[0] if "\t" in line else cols[0]
        if token == DOCSTART:
            continue
        words.append(token)
    if words:
        sentences.append(Sentence.make(words))
    return sentences


def parse_nested(
    text: str,
    corpus_id: str = "",
    language: str = "",
    strict: bool = True,
) -> list[Document]:
    """Parse the nested ``token<TAB>ann`` format.

    With ``strict`` (the default, for gold data) the per-token label lists
    must be exactly the canonical linearization of the spans they imply;
    files implying crossing spans or listing labels inner-before-outer are
    rejected with the offending sentence.  With ``strict=False`` the labels
    are repaired silently, as for raw decoder output.
    """
    documents: list[Document] = []
    sentences: list[Sentence] = []
    words: list[str] = []
    token_labels: list[tuple[str, ...]] = []
    sent_index = 0

    def finish_sentence():
        nonlocal sent_index
        if not words:
            return
        spans = delinearize(token_labels)
        if strict:
            canonical = linearize(len(words), spans).per_token
            if list(canonical) != token_labels:
                t = next(
                    i for i, (a, b) in enumerate(zip(canonical, token_labels)) if tuple(a) != tuple(b)
                )
                raise ParseError(
                    f"sentence {sent_index}: annotation at token {t} ({token_labels[t]!r}) "
                    "is not a valid outer-to-inner nesting (crossing or misordered labels)"
                )
        sentences.append(Sentence.make(words, nested=spans))
        words.clear()
        token_labels.clear()
        sent_index += 1

    def finish_document():
        finish_sentence()
        if sentences:
            documents.append(
                Document(
                    id=f"d{len(documents)}",
                    sentences=list(sentences),
                    corpus_id=corpus_id,
                    language=language,
                )
            )
            sentences.clear()

    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            finish_sentence()
            continue
        if line.split("\t")[0] == DOCSTART or line.split()[0] == DOCSTART:
            finish_document()
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ParseError(f"line {lineno}: expected token<TAB>annotation, got {line!r}")
        token, ann = cols
        words.append(token)
        token_labels.append(tuple(ann.split("|")) if ann != "O" else ())
    finish_document()
    return documents


def write_nested(doc: Document) -> str:
    """Serialize nested annotation; inverse of ``parse_nested`` on its output."""
    lines: list[str] = []
    for sentence in doc.sentences:
        per_token = linearize(len(sentence.tokens), sentence.nested_spans).per_token
        for token, labs in zip(sentence.words, per_token):
            lines.append(f"{token}\t{'|'.join(labs) if labs else 'O'}")
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def flatten_to_outermost(sentence: Sentence) -> Sentence:
    """Set flat_spans to the maximal nested spans (those contained in no other).

    Among spans sharing one maximal extent, the lexicographically smallest
    type is kept so the result stays disjoint.  Idempotent; nested spans are
    preserved untouched.
    """
    spans = sorted(sentence.nested_spans, key=lambda s: (s.start, s.start - s.end, s.etype))
    outermost: list[EntitySpan] = []
    for span in spans:
        if outermost and contains(outermost[-1], span):
            continue
        outermost.append(span)
    return Sentence(sentence.tokens, frozenset(outermost), sentence.nested_spans)


DROP = None


def map_labels(
    doc: Document, mapping: Mapping[str, str | None], default_passthrough: bool = True
) -> Document:
    """Relabel entity types; a mapping value of None drops the span.

    Span boundaries never change.  Types absent from the mapping pass
    through unchanged unless ``default_passthrough`` is disabled, in which
    case they raise.
    """

    def remap(spans: Iterable[EntitySpan]) -> list[EntitySpan]:
        out = []
        for span in spans:
            if span.etype in mapping:
                target = mapping[span.etype]
                if target is DROP:
                    continue
                out.append(EntitySpan(span.start, span.end, target))
            elif default_passthrough:
                out.append(span)
            else:
                raise ValueError(f"no mapping for entity type {span.etype!r}")
        return out

    sentences = [
        Sentence(s.tokens, frozenset(remap(s.flat_spans)), frozenset(remap(s.nested_spans)))
        for s in doc.sentences
    ]
    return Document(doc.id, sentences, doc.corpus_id, doc.language)
