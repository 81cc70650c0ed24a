"""Scikit-learn style estimators wrapping the training loop.

``FlatNerTagger`` and ``NestedNerTagger`` take X as a sequence of tokenized
sentences and y as per-sentence span collections, so they compose with the
usual fit/predict ecosystem; the richer multi-corpus, multi-tagset path is
``fit_corpora``.  Hyperparameters mirror the training-config field names.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .bundle import ModelBundle
from .encoder import EncoderConfig, init_encoder
from .evaluator import score_flat, score_nested
from .heads import init_flat_heads, init_nested_head
from .inference import predict_spans
from .tagsets import Tagset, TagsetRegistry
from .trainer import TrainConfig, TrainCorpus, train
from .types import EntitySpan
from .validation import build_documents, check_token_lists


def infer_registry(corpora: Sequence[TrainCorpus], nested: bool = False) -> TagsetRegistry:
    """Build a registry from gold annotation: one tagset per distinct name,
    entity types collected from the spans and sorted for stable ids."""
    collected: dict[str, set[str]] = {}
    for corpus in corpora:
        bucket = collected.setdefault(corpus.tagset, set())
        for doc in corpus.documents:
            for sentence in doc.sentences:
                spans = sentence.nested_spans if nested else sentence.flat_spans
                bucket.update(span.etype for span in spans)
    registry = TagsetRegistry()
    for name, etypes in collected.items():
        if not etypes:
            raise ValueError(f"corpus group {name!r} has no annotated spans to infer types from")
        registry.add(Tagset(name, tuple(sorted(etypes))))
    return registry


class _NerTagger(BaseEstimator):
    _kind = "flat"

    def __init__(
        self,
        etypes=None,
        width=64,
        n_buckets=4096,
        ngram_min=2,
        ngram_max=4,
        epochs=30,
        frozen_epochs=0,
        frozen_learning_rate=1e-3,
        batch_size=8,
        peak_learning_rate=2e-5,
        warmup_epochs=1,
        decay="cosine",
        seed=42,
        max_depth=16,
        max_len=512,
        clip_norm=1.0,
    ):
        self.etypes = etypes
        self.width = width
        self.n_buckets = n_buckets
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self.epochs = epochs
        self.frozen_epochs = frozen_epochs
        self.frozen_learning_rate = frozen_learning_rate
        self.batch_size = batch_size
        self.peak_learning_rate = peak_learning_rate
        self.warmup_epochs = warmup_epochs
        self.decay = decay
        self.seed = seed
        self.max_depth = max_depth
        self.max_len = max_len
        self.clip_norm = clip_norm

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            frozen_epochs=self.frozen_epochs,
            frozen_learning_rate=self.frozen_learning_rate,
            batch_size=self.batch_size,
            peak_learning_rate=self.peak_learning_rate,
            warmup_epochs=self.warmup_epochs,
            decay=self.decay,
            seed=self.seed,
            max_depth=self.max_depth,
            max_len=self.max_len,
            clip_norm=self.clip_norm,
        )

    def _encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            width=self.width,
            n_buckets=self.n_buckets,
            ngram_min=self.ngram_min,
            ngram_max=self.ngram_max,
        )

    def _init_bundle(self, registry: TagsetRegistry, nested_tagset: str | None) -> ModelBundle:
        rng = np.random.default_rng(self.seed)
        encoder = init_encoder(self._encoder_config(), rng)
        if self._kind == "flat":
            return ModelBundle(
                kind="flat",
                registry=registry,
                encoder=encoder,
                flat_heads=init_flat_heads(registry, self.width, rng),
                meta={"max_len": self.max_len},
            )
        etypes = registry[nested_tagset].etypes
        return ModelBundle(
            kind="nested",
            registry=registry,
            encoder=encoder,
            nested=init_nested_head(etypes, self.width, rng),
            meta={"max_len": self.max_len, "nested_tagset": nested_tagset},
        )

    def fit_corpora(
        self,
        train_corpora: Sequence[TrainCorpus],
        dev_corpora: Sequence[TrainCorpus] | None = None,
        registry: TagsetRegistry | None = None,
        embedders=None,
    ):
        nested = self._kind == "nested"
        if registry is None:
            registry = infer_registry(train_corpora, nested=nested)
        nested_tagset = train_corpora[0].tagset if nested else None
        bundle = self._init_bundle(registry, nested_tagset)
        result = train(
            self._train_config(),
            bundle,
            train_corpora,
            dev_corpora if dev_corpora is not None else train_corpora,
            embedders=embedders,
        )
        self.bundle_ = result.bundle
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.best_score_ = result.best_score
        return self

    def fit(self, X, y, dev=None):
        """Fit on one corpus: X tokenized sentences, y span collections."""
        nested = self._kind == "nested"
        docs = build_documents(X, y, nested=nested, corpus_id="train")
        tagset_name = "default"
        if self.etypes:
            registry = TagsetRegistry()
            registry.add(Tagset(tagset_name, tuple(self.etypes)))
        else:
            registry = None
        corpora = [TrainCorpus("train", tagset_name, docs)]
        if dev is not None:
            dev_docs = build_documents(*dev, nested=nested, corpus_id="dev")
            dev_corpora = [TrainCorpus("dev", tagset_name, dev_docs)]
        else:
            dev_corpora = corpora
        return self.fit_corpora(corpora, dev_corpora, registry=registry)

    def _check_fitted(self) -> ModelBundle:
        bundle = getattr(self, "bundle_", None)
        if bundle is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")
        return bundle

    def predict(self, X, tagset: str | None = None) -> list[list[EntitySpan]]:
        bundle = self._check_fitted()
        if bundle.kind == "flat":
            names = list(bundle.flat_heads.heads)
            if tagset is None:
                if len(names) != 1:
                    raise ValueError(f"model has tagsets {names}; pass tagset=...")
                tagset = names[0]
        return [
            predict_spans(bundle, words, tagset, max_len=self.max_len)
            for words in check_token_lists(X)
        ]

    def score(self, X, y, tagset: str | None = None) -> float:
        """Span micro F1 against gold annotation."""
        preds = self.predict(X, tagset=tagset)
        docs = build_documents(X, y, nested=self._kind == "nested")
        if self._kind == "flat":
            golds = [s.flat_spans for s in docs[0].sentences]
            return score_flat(golds, preds)[0].f1
        golds = [s.nested_spans for s in docs[0].sentences]
        return score_nested(golds, preds).f1


class FlatNerTagger(_NerTagger):
    """Per-tagset softmax tagging of disjoint entity spans."""

    _kind = "flat"


class NestedNerTagger(_NerTagger):
    """Seq2seq tagging of nested (non-crossing) entity spans."""

    _kind = "nested"
