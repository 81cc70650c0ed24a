"""Codecs between span annotation and per-token label sequences.

Two codecs live here:

* the flat BIO codec (``spans_to_bio`` / ``bio_to_spans``), where decoding is
  total and applies the usual IOB repair, and
* the nested linearization codec (``linearize`` / ``delinearize``) that turns
  a non-crossing span set into one label sequence per token, ordered
  outer-to-inner and implicitly terminated by an end-of-word sentinel.  This
  per-token label sequence is exactly the decoding target of the nested
  seq2seq head.

Decoding directions accept arbitrary model output and repair rather than
reject: an ``I-X`` with no matching open span opens a new one (rule R1).
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

from .types import EntitySpan, canonical_key, check_spans_in_range, find_overlap

MAX_DEPTH = 16
EOW = "<eow>"
BOS = "<bos>"

# label -> (continuation code, etype); B codes are odd, I codes even, O is 0,
# so the code that continues an open X is always the I code of X.  Unknown
# label shapes behave like "O" (decoding stays total on fuzz input).  The
# cache only grows when new etype strings appear, i.e. per tagset in practice.
_LABEL_INFO: dict[str, tuple[int, str | None]] = {"O": (0, None)}
_CONT_CODE: dict[str, int] = {}
_INFO_LOCK = threading.Lock()


def _label_info(label: str) -> tuple[int, str | None]:
    info = _LABEL_INFO.get(label)
    if info is None:
        with _INFO_LOCK:
            if len(label) > 2 and label[1] == "-" and label[0] in "BI":
                # interning makes the B-X and I-X entries share one etype
                # object, so decoding can compare types by identity
                etype = sys.intern(label[2:])
                code = _CONT_CODE.get(etype)
                if code is None:
                    code = 2 * len(_CONT_CODE) + 2
                    _CONT_CODE[etype] = code
                info = (code - 1 if label[0] == "B" else code, etype)
            else:
                info = (0, None)
            _LABEL_INFO[label] = info
    return info


def spans_to_bio(n_tokens: int, spans: Iterable[EntitySpan]) -> list[str]:
    """Encode disjoint spans as BIO labels.

    >>> spans_to_bio(5, [EntitySpan(0, 2, "PER"), EntitySpan(3, 4, "LOC")])
    ['B-PER', 'I-PER', 'O', 'B-LOC', 'O']
    """
    spans = list(spans)
    check_spans_in_range(spans, n_tokens)
    bad = find_overlap(spans)
    if bad is not None:
        raise ValueError(f"cannot BIO-encode overlapping spans: {bad[0]} / {bad[1]}")
    labels = ["O"] * n_tokens
    for span in spans:
        labels[span.start] = "B-" + span.etype
        for i in range(span.start + 1, span.end):
            labels[i] = "I-" + span.etype
    return labels


def bio_to_spans(labels: Sequence[str]) -> list[EntitySpan]:
    """Decode a BIO label sequence into spans, repairing invalid input.

    Total on any label sequence.  An ``I-X`` after ``O``, at the sequence
    start, or after a different type opens a new span; anything that is not
    ``B-X``/``I-X`` counts as outside.

    >>> bio_to_spans(["O", "I-PER", "I-PER"])
    [EntitySpan(start=1, end=3, etype='PER')]
    """
    spans: list[EntitySpan] = []
    append = spans.append
    info = _LABEL_INFO
    lookup = _label_info
    cur: str | None = None
    start = 0
    i = 0
    for lab in labels:
        pair = info.get(lab)
        if pair is None:
            pair = lookup(lab)
        code, etype = pair
        # fast path: I-label continuing the open span, or O while outside
        # (etype strings come from one table, so identity comparison is safe)
        if etype is cur and not code & 1:
            i += 1
            continue
        if cur is not None:
            append(EntitySpan(start, i, cur))
        cur = etype
        start = i
        i += 1
    if cur is not None:
        append(EntitySpan(start, i, cur))
    return spans


@dataclass(frozen=True)
class LinearizedLabels:
    """One open/continue label sequence per token, outer-to-inner.

    The end-of-word sentinel is implicit: it terminates every per-token
    sequence and is never stored.
    """

    per_token: tuple[tuple[str, ...], ...]

    def __len__(self) -> int:
        return len(self.per_token)

    @property
    def depth(self) -> int:
        return max((len(seq) for seq in self.per_token), default=0)


# etype -> ("B-etype", "I-etype"), validated once per distinct type string
_ETYPE_LABELS: dict[str, tuple[str, str]] = {}


def _etype_labels(etype: str) -> tuple[str, str]:
    pair = _ETYPE_LABELS.get(etype)
    if pair is None:
        if not etype or "|" in etype or any(c.isspace() for c in etype):
            raise ValueError(f"invalid entity type {etype!r}")
        with _INFO_LOCK:
            pair = ("B-" + etype, "I-" + etype)
            _ETYPE_LABELS[etype] = pair
    return pair


def linearize(
    n_tokens: int, spans: Iterable[EntitySpan], max_depth: int = MAX_DEPTH
) -> LinearizedLabels:
    """Flatten a non-crossing span set into per-token label sequences.

    Spans covering a token are listed outer-to-inner (start asc, length desc,
    ties by type), ``B-X`` where the token starts the span, else ``I-X``.

    >>> linearize(3, [EntitySpan(0, 3, "ORG"), EntitySpan(0, 2, "PER")]).per_token
    (('B-ORG', 'B-PER'), ('I-ORG', 'I-PER'), ('I-ORG',))
    """
    ordered = sorted(spans, key=canonical_key)
    per_token: list[list[str]] = [[] for _ in range(n_tokens)]
    # one sorted sweep validates range, duplicates, and crossings; the stack
    # holds the ends of currently open (containing) spans
    open_ends: list[int] = []
    prev = None
    for span in ordered:
        start, end, etype = span
        if not 0 <= start < end <= n_tokens:
            raise ValueError(f"span {span} out of range for sentence of {n_tokens} tokens")
        if span == prev:
            raise ValueError(f"duplicate span {span}")
        prev = span
        while open_ends and open_ends[-1] <= start:
            open_ends.pop()
        if open_ends and open_ends[-1] < end:
            raise ValueError(f"cannot linearize crossing spans near {span}")
        open_ends.append(end)
        if len(open_ends) > max_depth:
            raise ValueError(f"nesting depth exceeds max_depth={max_depth} at {span}")
        b_label, i_label = _etype_labels(etype)
        per_token[start].append(b_label)
        for i in range(start + 1, end):
            per_token[i].append(i_label)
    return LinearizedLabels(tuple(map(tuple, per_token)))


def delinearize(
    labels: LinearizedLabels | Sequence[Sequence[str]],
) -> list[EntitySpan]:
    """Reconstruct spans from per-token label sequences, repairing as needed.

    Maintains a stack of open spans, one per nesting slot.  At slot ``k``,
    ``I-X`` continues an open X; any other label (or a shorter label list)
    closes slots ``k`` and deeper before opening, so the result is
    non-crossing by construction.  Total on arbitrary decoder output; labels
    that are not ``B-``/``I-`` shaped act as gaps.  Returns canonically
    sorted spans with exact duplicates collapsed.
    """
    per_token = labels.per_token if isinstance(labels, LinearizedLabels) else labels
    spans: list[EntitySpan] = []
    append = spans.append
    info = _LABEL_INFO
    lookup = _label_info
    # parallel stacks of open slots, outer first
    open_etype: list[str] = []
    open_start: list[int] = []
    open_end: list[int] = []
    n_open = 0
    for t, token_labels in enumerate(per_token):
        slot = 0
        for lab in token_labels:
            pair = info.get(lab)
            if pair is None:
                pair = lookup(lab)
            code, etype = pair
            if code == 0:  # gap: close this slot and deeper, open nothing
                while n_open > slot:
                    n_open -= 1
                    append(EntitySpan(open_start.pop(), open_end.pop(), open_etype.pop()))
                continue
            if slot < n_open and not code & 1 and open_etype[slot] == etype:
                open_end[slot] = t + 1
            else:
                while n_open > slot:
                    n_open -= 1
                    append(EntitySpan(open_start.pop(), open_end.pop(), open_etype.pop()))
                open_etype.append(etype)
                open_start.append(t)
                open_end.append(t + 1)
                n_open += 1
            slot += 1
        while n_open > slot:
            n_open -= 1
            append(EntitySpan(open_start.pop(), open_end.pop(), open_etype.pop()))
    while n_open:
        n_open -= 1
        append(EntitySpan(open_start.pop(), open_end.pop(), open_etype.pop()))
    if len(spans) > 1:
        spans = sorted(set(spans), key=canonical_key)
    return spans
