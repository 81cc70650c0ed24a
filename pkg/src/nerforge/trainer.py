"""Multi-corpus training loop.

Batches draw corpora with probability proportional to the square root of
their sentence counts (downsampling the largest corpora, upsampling the
smallest), then a sentence uniformly within the drawn corpus.  The learning
rate warms up linearly, then decays with a cosine to zero at the final step;
an optional initial phase trains only the heads at a constant rate while the
encoder stays frozen.  After every epoch each dev corpus is scored with span
micro F1 and the checkpoint with the best unweighted mean across corpora is
kept (ties resolve to the earlier epoch).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .bundle import ModelBundle, deserialize_bundle, serialize_bundle
from .codec import MAX_DEPTH, linearize, delinearize, spans_to_bio
from .encoder import PrecomputedEmbeddings, backward_from_cache, encode_with_cache
from .evaluator import PRF, macro_f1, score_flat, score_nested
from .heads import flat_loss, flat_predict, nested_decode, nested_loss
from .optim import Adam, clip_global_norm
from .types import Document, Sentence


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    frozen_epochs: int = 0
    frozen_learning_rate: float = 1e-3
    batch_size: int = 8
    peak_learning_rate: float = 2e-5
    warmup_epochs: int = 1
    decay: str = "cosine"
    seed: int = 42
    max_depth: int = MAX_DEPTH
    max_len: int = 512
    clip_norm: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if min(self.epochs, self.frozen_epochs, self.warmup_epochs, self.batch_size) < 0:
            raise ConfigError("epoch and batch counts must be >= 0")
        if self.batch_size == 0:
            raise ConfigError("batch_size must be >= 1")
        if self.peak_learning_rate <= 0 or self.frozen_learning_rate <= 0:
            raise ConfigError("learning rates must be > 0")
        if self.decay != "cosine":
            raise ConfigError(f"unsupported decay {self.decay!r}")

    def to_dict(self) -> dict:
        return asdict(self)


class Example(NamedTuple):
    corpus_id: str
    doc_id: str
    sent_index: int
    sentence: Sentence
    tagset: str


@dataclass
class TrainCorpus:
    """A corpus bound to the tagset (or nested inventory) it trains."""

    corpus_id: str
    tagset: str
    documents: list[Document]
    _examples: list[Example] = field(default_factory=list, repr=False)

    @property
    def examples(self) -> list[Example]:
        if not self._examples:
            for doc in self.documents:
                for i, sentence in enumerate(doc.sentences):
                    self._examples.append(
                        Example(self.corpus_id, doc.id, i, sentence, self.tagset)
                    )
        return self._examples

    @property
    def n_sentences(self) -> int:
        return len(self.examples)


def sqrt_temperature_weights(sizes: Mapping[str, int]) -> dict[str, float]:
    """p(c) = sqrt(size(c)) / sum(sqrt(sizes)).

    >>> sqrt_temperature_weights({"A": 100, "B": 400})
    {'A': 0.3333333333333333, 'B': 0.6666666666666666}
    """
    if not sizes:
        raise ConfigError("no corpora to sample from")
    for cid, n in sizes.items():
        if n <= 0:
            raise ConfigError(f"corpus {cid!r} has no sentences")
    roots = {cid: math.sqrt(n) for cid, n in sizes.items()}
    total = sum(roots.values())
    return {cid: r / total for cid, r in roots.items()}


def sample_batch(
    rng: np.random.Generator,
    weights: Mapping[str, float],
    corpora: Mapping[str, Sequence[Example]],
    batch_size: int,
) -> list[Example]:
    """Draw batch_size examples: corpus by weight, then sentence uniformly.

    Sampling is per slot, with replacement, so one batch may mix corpora.
    """
    ids = list(weights)
    probs = np.array([weights[c] for c in ids])
    batch = []
    for corpus_idx in rng.choice(len(ids), size=batch_size, p=probs):
        pool = corpora[ids[corpus_idx]]
        batch.append(pool[int(rng.integers(len(pool)))])
    return batch


def lr_at(config: TrainConfig, step: int, steps_per_epoch: int) -> float:
    """Learning rate at a global step (frozen phase counts steps too)."""
    frozen_steps = config.frozen_epochs * steps_per_epoch
    if step < frozen_steps:
        return config.frozen_learning_rate
    s = step - frozen_steps
    warmup = config.warmup_epochs * steps_per_epoch
    if s < warmup:
        return config.peak_learning_rate * s / warmup
    last = config.epochs * steps_per_epoch - 1
    if last <= warmup:
        return config.peak_learning_rate
    frac = min(1.0, (s - warmup) / (last - warmup))
    return config.peak_learning_rate * 0.5 * (1.0 + math.cos(math.pi * frac))


@dataclass
class TrainResult:
    bundle: ModelBundle
    history: list[dict]
    best_epoch: int
    best_score: float

    def history_lines(self) -> list[str]:
        import json

        return [json.dumps(rec, sort_keys=True) for rec in self.history]


def _encode_example(bundle: ModelBundle, example: Example, embedders) -> tuple[np.ndarray, dict | None]:
    """Encoder output for one example; cache is None for precomputed vectors."""
    words = example.sentence.words
    provider = embedders.get(example.corpus_id) if embedders else None
    if provider is not None:
        return provider.embed_keyed(example.doc_id, example.sent_index, len(words)), None
    return encode_with_cache(bundle.encoder, words)


def _example_loss(bundle: ModelBundle, example: Example, config: TrainConfig, embedders):
    enc, cache = _encode_example(bundle, example, embedders)
    sentence = example.sentence
    if bundle.kind == "flat":
        tagset = bundle.registry[example.tagset]
        labels = spans_to_bio(len(sentence.tokens), sentence.flat_spans)
        loss, grads, d_enc = flat_loss(bundle.flat_heads, enc, tagset, tagset.encode(labels))
    else:
        gold = linearize(len(sentence.tokens), sentence.nested_spans, config.max_depth)
        loss, grads, d_enc = nested_loss(bundle.nested, enc, gold)
    if cache is not None:
        grads.update(backward_from_cache(bundle.encoder, cache, d_enc))
    return loss, grads


def evaluate_corpus(bundle: ModelBundle, corpus: TrainCorpus, embedders=None) -> PRF:
    """Span micro F1 of the bundle on one corpus."""
    golds, preds = [], []
    for example in corpus.examples:
        enc, _ = _encode_example(bundle, example, embedders)
        if bundle.kind == "flat":
            tagset = bundle.registry[example.tagset]
            golds.append(example.sentence.flat_spans)
            preds.append(flat_predict(bundle.flat_heads, enc, tagset))
        else:
            golds.append(example.sentence.nested_spans)
            preds.append(delinearize(nested_decode(bundle.nested, enc)))
    if bundle.kind == "flat":
        return score_flat(golds, preds)[0]
    return score_nested(golds, preds)


def _validate_corpora(bundle: ModelBundle, corpora: Sequence[TrainCorpus], embedders) -> None:
    for corpus in corpora:
        if bundle.kind == "flat":
            if corpus.tagset not in bundle.registry or (
                bundle.flat_heads and corpus.tagset not in bundle.flat_heads.heads
            ):
                raise ConfigError(
                    f"corpus {corpus.corpus_id!r} maps to unregistered tagset {corpus.tagset!r}"
                )
        else:
            if bundle.nested is None:
                raise ConfigError("nested training requires a bundle with a nested head")
            inventory = set(bundle.nested.etypes)
            for example in corpus.examples:
                bad = {s.etype for s in example.sentence.nested_spans} - inventory
                if bad:
                    raise ConfigError(
                        f"corpus {corpus.corpus_id!r} uses entity types outside the "
                        f"nested inventory: {sorted(bad)}"
                    )
        if embedders and corpus.corpus_id in embedders:
            width = embedders[corpus.corpus_id].width
            if width != bundle.encoder.config.width:
                raise ConfigError(
                    f"precomputed embeddings for {corpus.corpus_id!r} have width {width}, "
                    f"model expects {bundle.encoder.config.width}"
                )


def train(
    config: TrainConfig,
    bundle: ModelBundle,
    train_corpora: Sequence[TrainCorpus],
    dev_corpora: Sequence[TrainCorpus],
    embedders: Mapping[str, PrecomputedEmbeddings] | None = None,
) -> TrainResult:
    """Train the bundle in place and return the best checkpoint by dev macro F1."""
    if not train_corpora:
        raise ConfigError("no training corpora")
    _validate_corpora(bundle, list(train_corpora) + list(dev_corpora), embedders)

    rng = np.random.default_rng(config.seed)
    sizes = {c.corpus_id: c.n_sentences for c in train_corpora}
    weights = sqrt_temperature_weights(sizes)
    pools = {c.corpus_id: c.examples for c in train_corpora}
    steps_per_epoch = max(1, math.ceil(sum(sizes.values()) / config.batch_size))
    total_epochs = config.frozen_epochs + config.epochs

    optimizer = Adam(beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps)
    arrays = bundle.arrays()
    encoder_keys = set(bundle.encoder.arrays())
    user_frozen = bundle.encoder.frozen

    history: list[dict] = []
    best_bytes: bytes | None = None
    best_score = -math.inf
    best_epoch = 0
    step = 0

    for epoch in range(1, total_epochs + 1):
        in_frozen_phase = epoch <= config.frozen_epochs
        bundle.encoder.frozen = user_frozen or in_frozen_phase
        skip = encoder_keys if bundle.encoder.frozen else set()

        loss_sums: dict[str, float] = {c.corpus_id: 0.0 for c in train_corpora}
        loss_counts: dict[str, int] = {c.corpus_id: 0 for c in train_corpora}
        for _ in range(steps_per_epoch):
            batch = sample_batch(rng, weights, pools, config.batch_size)
            lr = lr_at(config, step, steps_per_epoch)
            acc: dict[str, np.ndarray] = {}
            for example in batch:
                loss, grads = _example_loss(bundle, example, config, embedders)
                loss_sums[example.corpus_id] += loss
                loss_counts[example.corpus_id] += 1
                for name, grad in grads.items():
                    if name in acc:
                        acc[name] += grad
                    else:
                        acc[name] = grad
            for grad in acc.values():
                grad /= len(batch)
            clip_global_norm(acc, config.clip_norm)
            optimizer.step(arrays, acc, lr, skip=skip)
            step += 1

        scores = []
        for corpus in dev_corpora:
            prf = evaluate_corpus(bundle, corpus, embedders)
            scores.append(prf.f1)
            n_train = loss_counts.get(corpus.corpus_id, 0)
            history.append(
                {
                    "epoch": epoch,
                    "corpus": corpus.corpus_id,
                    "loss": (loss_sums[corpus.corpus_id] / n_train) if n_train else None,
                    "precision": prf.precision,
                    "recall": prf.recall,
                    "f1": prf.f1,
                }
            )
        for corpus in train_corpora:
            if any(c.corpus_id == corpus.corpus_id for c in dev_corpora):
                continue
            n_train = loss_counts[corpus.corpus_id]
            history.append(
                {
                    "epoch": epoch,
                    "corpus": corpus.corpus_id,
                    "loss": (loss_sums[corpus.corpus_id] / n_train) if n_train else None,
                    "precision": None,
                    "recall": None,
                    "f1": None,
                }
            )
        epoch_score = macro_f1(scores) if scores else -math.inf
        if epoch_score > best_score:
            best_score = epoch_score
            best_epoch = epoch
            bundle.encoder.frozen = user_frozen
            best_bytes = serialize_bundle(bundle)
            bundle.encoder.frozen = user_frozen or in_frozen_phase

    bundle.encoder.frozen = user_frozen
    if best_bytes is None:
        best_bytes = serialize_bundle(bundle)
        best_epoch = total_epochs
        best_score = float("nan")
    best = deserialize_bundle(best_bytes)
    best.meta = dict(best.meta, best_epoch=best_epoch, train_config=config.to_dict())
    return TrainResult(bundle=best, history=history, best_epoch=best_epoch, best_score=best_score)
