"""Prediction heads over encoder output.

``FlatHeads`` keeps one affine softmax classifier per tagset; routing a
sentence through tagset T touches only T's weights, which is what guarantees
that only T's labels can ever be predicted and that training one tagset
leaks no gradient into another.

``NestedHead`` is a seq2seq decoder with hard attention on the current
token: for each token in turn, a single-layer gated recurrent cell is seeded
from that token's encoder vector and greedily emits nested labels until the
end-of-word sentinel.  Teacher-forced training backpropagates through the
recurrence in time and into the encoder.

All gradients here are exact and are validated against central finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import EOW, MAX_DEPTH, LinearizedLabels, bio_to_spans
from .tagsets import Tagset, TagsetRegistry
from .types import EntitySpan


class RoutingError(LookupError):
    """Raised when a request names a tagset the model has no head for."""


@dataclass
class AffineHead:
    w: np.ndarray  # (width, n_labels)
    b: np.ndarray  # (n_labels,)


@dataclass
class FlatHeads:
    heads: dict[str, AffineHead]

    def arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name, head in self.heads.items():
            out[f"flat.{name}.w"] = head.w
            out[f"flat.{name}.b"] = head.b
        return out


def init_flat_heads(registry: TagsetRegistry, width: int, rng: np.random.Generator) -> FlatHeads:
    heads = {}
    for name in registry.names():
        n_labels = registry[name].n_labels
        heads[name] = AffineHead(
            w=rng.uniform(-0.1, 0.1, (width, n_labels)),
            b=np.zeros(n_labels),
        )
    return FlatHeads(heads)


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def flat_forward(heads: FlatHeads, enc: np.ndarray, tagset: str) -> np.ndarray:
    """Logits (n_tokens, n_labels) from the requested tagset's head only."""
    try:
        head = heads.heads[tagset]
    except KeyError:
        raise RoutingError(f"no classification head for tagset {tagset!r}") from None
    return enc @ head.w + head.b


def flat_predict(heads: FlatHeads, enc: np.ndarray, tagset: Tagset) -> list[EntitySpan]:
    """Per-token argmax decoded to spans with BIO repair."""
    logits = flat_forward(heads, enc, tagset.name)
    ids = logits.argmax(axis=-1)
    return bio_to_spans(tagset.decode(ids))


def flat_loss(
    heads: FlatHeads, enc: np.ndarray, tagset: Tagset, gold_ids: Sequence[int]
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Mean token cross-entropy; returns (loss, head gradients, d_enc).

    Gradients touch only the requested head; the encoder gradient comes back
    through ``d_enc``.
    """
    gold = np.asarray(gold_ids, dtype=np.intp)
    logits = flat_forward(heads, enc, tagset.name)
    n, n_labels = logits.shape
    if gold.shape != (n,):
        raise ValueError(f"gold labels have shape {gold.shape}, want ({n},)")
    if gold.min(initial=0) < 0 or gold.max(initial=0) >= n_labels:
        raise ValueError(f"gold label id out of range for tagset {tagset.name!r}")
    probs = _softmax_rows(logits)
    loss = -float(np.mean(np.log(probs[np.arange(n), gold])))
    d_logits = probs
    d_logits[np.arange(n), gold] -= 1.0
    d_logits /= n
    head = heads.heads[tagset.name]
    grads = {
        f"flat.{tagset.name}.w": enc.T @ d_logits,
        f"flat.{tagset.name}.b": d_logits.sum(axis=0),
    }
    return loss, grads, d_logits @ head.w.T


@dataclass
class NestedHead:
    """Seq2seq decoder weights over the nested-label vocabulary.

    Vocabulary rows are ``B-X``/``I-X`` per entity type followed by the
    end-of-word sentinel; the embedding table has one extra row for the
    begin sentinel fed at the first decode step.
    """

    etypes: tuple[str, ...]
    label_emb: np.ndarray  # (vocab + 1, width); last row is <bos>
    wz: np.ndarray
    wr: np.ndarray
    wh: np.ndarray
    uz: np.ndarray
    ur: np.ndarray
    uh: np.ndarray
    bz: np.ndarray
    br: np.ndarray
    bh: np.ndarray
    w_out: np.ndarray  # (width, vocab)
    b_out: np.ndarray  # (vocab,)

    @property
    def vocab(self) -> tuple[str, ...]:
        labels = []
        for etype in self.etypes:
            labels.append("B-" + etype)
            labels.append("I-" + etype)
        labels.append(EOW)
        return tuple(labels)

    @property
    def eow_id(self) -> int:
        return 2 * len(self.etypes)

    @property
    def bos_row(self) -> int:
        return 2 * len(self.etypes) + 1

    def label_id(self, label: str) -> int:
        ids = getattr(self, "_label_ids", None)
        if ids is None:
            ids = {lab: i for i, lab in enumerate(self.vocab)}
            self._label_ids = ids
        return ids[label]

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "nested.label_emb": self.label_emb,
            "nested.wz": self.wz,
            "nested.wr": self.wr,
            "nested.wh": self.wh,
            "nested.uz": self.uz,
            "nested.ur": self.ur,
            "nested.uh": self.uh,
            "nested.bz": self.bz,
            "nested.br": self.br,
            "nested.bh": self.bh,
            "nested.w_out": self.w_out,
            "nested.b_out": self.b_out,
        }


def init_nested_head(etypes: Sequence[str], width: int, rng: np.random.Generator) -> NestedHead:
    vocab = 2 * len(etypes) + 1

    def u(*shape):
        return rng.uniform(-0.1, 0.1, shape)

    return NestedHead(
        etypes=tuple(etypes),
        label_emb=u(vocab + 1, width),
        wz=u(width, width),
        wr=u(width, width),
        wh=u(width, width),
        uz=u(width, width),
        ur=u(width, width),
        uh=u(width, width),
        bz=np.zeros(width),
        br=np.zeros(width),
        bh=np.zeros(width),
        w_out=u(width, vocab),
        b_out=np.zeros(vocab),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _gru_step(head: NestedHead, x: np.ndarray, h: np.ndarray):
    z = _sigmoid(x @ head.wz + h @ head.uz + head.bz)
    r = _sigmoid(x @ head.wr + h @ head.ur + head.br)
    hc = np.tanh(x @ head.wh + (r * h) @ head.uh + head.bh)
    h_new = (1.0 - z) * h + z * hc
    return h_new, (x, h, z, r, hc)


def nested_decode(head: NestedHead, enc: np.ndarray, max_depth: int = MAX_DEPTH) -> LinearizedLabels:
    """Greedy decoding: one label sequence per token, capped at max_depth.

    Hard attention on the current token: each token's recurrence starts from
    that token's encoder vector and sees nothing else.
    """
    n = enc.shape[0]
    vocab = head.vocab
    eow = head.eow_id
    sequences: list[list[str]] = [[] for _ in range(n)]
    h = enc
    prev = np.full(n, head.bos_row, dtype=np.intp)
    active = np.ones(n, dtype=bool)
    for _ in range(max_depth):
        if not active.any():
            break
        h, _ = _gru_step(head, head.label_emb[prev], h)
        logits = h @ head.w_out + head.b_out
        choice = logits.argmax(axis=-1)
        for t in np.flatnonzero(active):
            if choice[t] == eow:
                active[t] = False
            else:
                sequences[t].append(vocab[choice[t]])
        prev = choice
    return LinearizedLabels(tuple(tuple(seq) for seq in sequences))


def nested_loss(
    head: NestedHead, enc: np.ndarray, gold: LinearizedLabels
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Teacher-forced cross-entropy over each token's labels plus <eow>.

    The loss is averaged over all emitted symbols of the sentence.  Returns
    (loss, decoder gradients, d_enc).
    """
    n, width = enc.shape
    if len(gold.per_token) != n:
        raise ValueError(f"gold has {len(gold.per_token)} token slots, encoder output has {n}")
    try:
        gold_ids = [[head.label_id(lab) for lab in seq] for seq in gold.per_token]
    except KeyError as exc:
        raise ValueError(f"gold label {exc.args[0]!r} outside nested vocabulary") from None
    eow = head.eow_id
    bos = head.bos_row
    lengths = np.array([len(seq) for seq in gold_ids], dtype=np.intp)
    steps = int(lengths.max(initial=0)) + 1
    inputs = np.full((n, steps), bos, dtype=np.intp)
    targets = np.zeros((n, steps), dtype=np.intp)
    mask = np.zeros((n, steps), dtype=bool)
    for t, seq in enumerate(gold_ids):
        for s, lab in enumerate(seq):
            inputs[t, s + 1] = lab
            targets[t, s] = lab
        targets[t, len(seq)] = eow
        mask[t, : len(seq) + 1] = True
    total = int(mask.sum())

    h = enc
    caches = []
    probs_steps = []
    states = []
    loss = 0.0
    for s in range(steps):
        h, cache = _gru_step(head, head.label_emb[inputs[:, s]], h)
        logits = h @ head.w_out + head.b_out
        probs = _softmax_rows(logits)
        valid = mask[:, s]
        loss -= np.log(probs[valid, targets[valid, s]]).sum()
        caches.append(cache)
        probs_steps.append(probs)
        states.append(h)
    loss = float(loss / total)

    grads = {name: np.zeros_like(arr) for name, arr in head.arrays().items()}
    d_h = np.zeros_like(enc)
    rows = np.arange(n)
    for s in range(steps - 1, -1, -1):
        d_logits = probs_steps[s].copy()
        d_logits[rows, targets[:, s]] -= 1.0
        d_logits *= mask[:, s, None]
        d_logits /= total
        grads["nested.w_out"] += states[s].T @ d_logits
        grads["nested.b_out"] += d_logits.sum(axis=0)
        d_h = d_h + d_logits @ head.w_out.T

        x, h_prev, z, r, hc = caches[s]
        d_z = d_h * (hc - h_prev)
        d_zr = d_z * z * (1.0 - z)
        d_hc = d_h * z
        d_hcr = d_hc * (1.0 - hc * hc)
        d_rh = d_hcr @ head.uh.T
        d_r = d_rh * h_prev
        d_rr = d_r * r * (1.0 - r)
        d_x = d_zr @ head.wz.T + d_rr @ head.wr.T + d_hcr @ head.wh.T
        grads["nested.wz"] += x.T @ d_zr
        grads["nested.wr"] += x.T @ d_rr
        grads["nested.wh"] += x.T @ d_hcr
        grads["nested.uz"] += h_prev.T @ d_zr
        grads["nested.ur"] += h_prev.T @ d_rr
        grads["nested.uh"] += (r * h_prev).T @ d_hcr
        grads["nested.bz"] += d_zr.sum(axis=0)
        grads["nested.br"] += d_rr.sum(axis=0)
        grads["nested.bh"] += d_hcr.sum(axis=0)
        np.add.at(grads["nested.label_emb"], inputs[:, s], d_x)
        d_h = d_h * (1.0 - z) + d_rh * r + d_zr @ head.uz.T + d_rr @ head.ur.T
    return loss, grads, d_h
