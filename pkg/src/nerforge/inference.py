"""Prediction over raw token sequences, including long-sentence windowing.

Sentences longer than the model's length cap are split into overlapping
windows (overlap 32), predicted independently, and merged: when windows
disagree, the span predicted farther from a window edge wins, because edge
tokens lack one-sided context.
"""

from __future__ import annotations

from typing import Sequence

from .bundle import ModelBundle
from .codec import delinearize
from .encoder import embed
from .heads import flat_predict, nested_decode
from .types import EntitySpan, canonical_key, contains

WINDOW_OVERLAP = 32


def _predict_window(bundle: ModelBundle, words: Sequence[str], tagset_name: str | None):
    enc = embed(bundle.encoder, words)
    if bundle.kind == "flat":
        return flat_predict(bundle.flat_heads, enc, bundle.registry[tagset_name])
    return delinearize(nested_decode(bundle.nested, enc))


def _windows(n: int, max_len: int) -> list[tuple[int, int]]:
    stride = max(1, max_len - WINDOW_OVERLAP)
    starts = [0]
    while starts[-1] + max_len < n:
        starts.append(min(starts[-1] + stride, n - max_len))
    return [(s, s + max_len) for s in starts]


def _compatible(span: EntitySpan, kept: list[EntitySpan], nested: bool) -> bool:
    for other in kept:
        if span.end <= other.start or other.end <= span.start:
            continue
        if nested and (contains(other, span) or contains(span, other)):
            if (span.start, span.end, span.etype) != (other.start, other.end, other.etype):
                continue
        return False
    return True


def predict_spans(
    bundle: ModelBundle,
    words: Sequence[str],
    tagset: str | None = None,
    max_len: int | None = None,
) -> list[EntitySpan]:
    """Spans for one sentence, windowed if it exceeds the length cap."""
    if not words:
        return []
    if max_len is None:
        max_len = int(bundle.meta.get("train_config", {}).get("max_len", 512))
    if len(words) <= max_len:
        return sorted(_predict_window(bundle, words, tagset), key=canonical_key)

    candidates: dict[EntitySpan, int] = {}
    for w_start, w_end in _windows(len(words), max_len):
        local = _predict_window(bundle, words[w_start:w_end], tagset)
        size = w_end - w_start
        for span in local:
            shifted = EntitySpan(span.start + w_start, span.end + w_start, span.etype)
            edge_distance = min(span.start, size - span.end)
            if candidates.get(shifted, -1) < edge_distance:
                candidates[shifted] = edge_distance
    ranked = sorted(
        candidates.items(), key=lambda item: (-item[1],) + canonical_key(item[0])
    )
    kept: list[EntitySpan] = []
    nested = bundle.kind == "nested"
    for span, _ in ranked:
        if _compatible(span, kept, nested):
            kept.append(span)
    return sorted(kept, key=canonical_key)
