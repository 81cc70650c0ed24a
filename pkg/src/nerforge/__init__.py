"""nerforge: flat and nested named-entity recognition at desk scale."""

from .bundle import ModelBundle, load_bundle, save_bundle
from .codec import (
    EOW,
    MAX_DEPTH,
    LinearizedLabels,
    bio_to_spans,
    delinearize,
    linearize,
    spans_to_bio,
)
from .corpus_io import (
    ParseError,
    flatten_to_outermost,
    map_labels,
    parse_conll_tokens,
    parse_flat_conll,
    parse_nested,
    write_flat_conll,
    write_nested,
)
from .encoder import EncoderConfig, EncoderParams, PrecomputedEmbeddings, embed, embed_backward, init_encoder
from .estimators import FlatNerTagger, NestedNerTagger, infer_registry
from .evaluator import PRF, macro_f1, score_flat, score_nested
from .heads import (
    FlatHeads,
    NestedHead,
    RoutingError,
    flat_forward,
    flat_loss,
    flat_predict,
    init_flat_heads,
    init_nested_head,
    nested_decode,
    nested_loss,
)
from .inference import predict_spans
from .tagsets import Tagset, TagsetRegistry, default_registry, load_registry, validate_labels
from .tokenizer import tokenize_plain
from .trainer import (
    TrainConfig,
    TrainCorpus,
    TrainResult,
    lr_at,
    sample_batch,
    sqrt_temperature_weights,
    train,
)
from .types import Document, EntitySpan, Sentence, Token

__version__ = "0.1.0"

__all__ = [
    "Document",
    "EncoderConfig",
    "EncoderParams",
    "EntitySpan",
    "EOW",
    "FlatHeads",
    "FlatNerTagger",
    "LinearizedLabels",
    "MAX_DEPTH",
    "ModelBundle",
    "NestedHead",
    "NestedNerTagger",
    "ParseError",
    "PRF",
    "PrecomputedEmbeddings",
    "RoutingError",
    "Sentence",
    "Tagset",
    "TagsetRegistry",
    "Token",
    "TrainConfig",
    "TrainCorpus",
    "TrainResult",
    "bio_to_spans",
    "default_registry",
    "delinearize",
    "embed",
    "embed_backward",
    "flat_forward",
    "flat_loss",
    "flat_predict",
    "flatten_to_outermost",
    "infer_registry",
    "init_encoder",
    "init_flat_heads",
    "init_nested_head",
    "linearize",
    "load_bundle",
    "load_registry",
    "lr_at",
    "macro_f1",
    "map_labels",
    "nested_decode",
    "nested_loss",
    "parse_conll_tokens",
    "parse_flat_conll",
    "parse_nested",
    "predict_spans",
    "sample_batch",
    "save_bundle",
    "score_flat",
    "score_nested",
    "spans_to_bio",
    "sqrt_temperature_weights",
    "tokenize_plain",
    "train",
    "validate_labels",
    "write_flat_conll",
    "write_nested",
]
