"""Contextual token embeddings with exact analytic gradients.

Two backends provide the same (n_tokens x width) contract:

* a small trainable encoder -- hashed character n-gram embeddings summed
  per token, mixed by one single-head scaled dot-product self-attention
  layer with a residual connection; and
* a precomputed-embedding file keyed by (document id, sentence index), for
  plugging vectors produced offline by a larger model.

Everything is float64 so finite-difference gradient checks are meaningful.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

PRECOMPUTED_MAGIC = b"NRFE"
PRECOMPUTED_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    width: int = 64
    n_buckets: int = 4096
    ngram_min: int = 2
    ngram_max: int = 4

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "n_buckets": self.n_buckets,
            "ngram_min": self.ngram_min,
            "ngram_max": self.ngram_max,
        }


@dataclass
class EncoderParams:
    config: EncoderConfig
    buckets: np.ndarray
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    frozen: bool = False

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "encoder.buckets": self.buckets,
            "encoder.wq": self.wq,
            "encoder.wk": self.wk,
            "encoder.wv": self.wv,
            "encoder.wo": self.wo,
        }


def init_encoder(config: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    """Uniform [-0.1, 0.1] init, deterministic given the generator state."""

    def u(*shape):
        return rng.uniform(-0.1, 0.1, shape)

    d = config.width
    return EncoderParams(
        config=config,
        buckets=u(config.n_buckets, d),
        wq=u(d, d),
        wk=u(d, d),
        wv=u(d, d),
        wo=u(d, d),
    )


# (config key, token) -> bucket ids; crc32 keeps hashing stable across runs
# and processes, unlike the builtin randomized str hash.
_BUCKET_CACHE: dict[tuple, np.ndarray] = {}


def token_bucket_ids(token: str, config: EncoderConfig) -> np.ndarray:
    key = (config.n_buckets, config.ngram_min, config.ngram_max, token)
    cached = _BUCKET_CACHE.get(key)
    if cached is not None:
        return cached
    decorated = "\x02" + token + "\x03"
    grams = [decorated]
    for n in range(config.ngram_min, config.ngram_max + 1):
        grams.extend(decorated[i : i + n] for i in range(len(decorated) - n + 1))
    ids = np.array(
        sorted(zlib.crc32(g.encode("utf-8")) % config.n_buckets for g in grams),
        dtype=np.intp,
    )
    _BUCKET_CACHE[key] = ids
    return ids


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def encode_with_cache(params: EncoderParams, tokens: Sequence[str]) -> tuple[np.ndarray, dict]:
    """Forward pass returning the output and the cache the backward pass needs."""
    if not tokens:
        raise ValueError("cannot embed an empty token list")
    cfg = params.config
    ids = [token_bucket_ids(tok, cfg) for tok in tokens]
    base = np.stack([params.buckets[i].sum(axis=0) for i in ids])
    q = base @ params.wq
    k = base @ params.wk
    v = base @ params.wv
    scores = (q @ k.T) / np.sqrt(cfg.width)
    attn = _softmax_rows(scores)
    ctx = attn @ v
    out = base + ctx @ params.wo
    cache = {"ids": ids, "base": base, "q": q, "k": k, "v": v, "attn": attn, "ctx": ctx}
    return out, cache


def embed(params: EncoderParams, tokens: Sequence[str]) -> np.ndarray:
    """Contextual embeddings, shape (len(tokens), width).  Deterministic."""
    return encode_with_cache(params, tokens)[0]


def backward_from_cache(
    params: EncoderParams, cache: dict, d_out: np.ndarray
) -> dict[str, np.ndarray]:
    """Parameter gradients for the cached forward pass.

    Returns an empty dict when the encoder is frozen (all-zero gradients by
    definition).
    """
    base = cache["base"]
    if d_out.shape != base.shape:
        raise ValueError(f"upstream gradient shape {d_out.shape} != output shape {base.shape}")
    if params.frozen:
        return {}
    attn, q, k, v, ctx = cache["attn"], cache["q"], cache["k"], cache["v"], cache["ctx"]
    scale = 1.0 / np.sqrt(params.config.width)

    d_ctx = d_out @ params.wo.T
    d_wo = ctx.T @ d_out
    d_attn = d_ctx @ v.T
    d_v = attn.T @ d_ctx
    # softmax rows: dS = A * (dA - sum(dA * A, rows))
    d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
    d_q = d_scores @ k * scale
    d_k = d_scores.T @ q * scale
    d_base = d_out + d_q @ params.wq.T + d_k @ params.wk.T + d_v @ params.wv.T
    d_wq = base.T @ d_q
    d_wk = base.T @ d_k
    d_wv = base.T @ d_v
    d_buckets = np.zeros_like(params.buckets)
    for row, ids in zip(d_base, cache["ids"]):
        np.add.at(d_buckets, ids, row)
    return {
        "encoder.buckets": d_buckets,
        "encoder.wq": d_wq,
        "encoder.wk": d_wk,
        "encoder.wv": d_wv,
        "encoder.wo": d_wo,
    }


def embed_backward(
    params: EncoderParams, tokens: Sequence[str], d_out: np.ndarray
) -> dict[str, np.ndarray]:
    """Exact gradients of sum(embed(params, tokens) * d_out) w.r.t. params."""
    _, cache = encode_with_cache(params, tokens)
    return backward_from_cache(params, cache, d_out)


class PrecomputedEmbeddings:
    """Per-sentence embedding matrices loaded from a keyed binary file.

    Layout (version 1): magic, u32 version, u64 header length, JSON header
    (width plus an entry list with key, token count, blob offset), then the
    float64 little-endian matrices back to back.
    """

    def __init__(self, width: int, matrices: Mapping[tuple[str, int], np.ndarray]):
        self.width = width
        self._matrices = dict(matrices)
        for key, mat in self._matrices.items():
            if mat.ndim != 2 or mat.shape[1] != width:
                raise ValueError(f"matrix for {key} has shape {mat.shape}, want (*, {width})")

    def __len__(self) -> int:
        return len(self._matrices)

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._matrices

    def embed_keyed(self, doc_id: str, sent_index: int, n_tokens: int | None = None) -> np.ndarray:
        key = (doc_id, sent_index)
        mat = self._matrices.get(key)
        if mat is None:
            raise KeyError(f"no precomputed embedding for document {doc_id!r} sentence {sent_index}")
        if n_tokens is not None and mat.shape[0] != n_tokens:
            raise ValueError(
                f"precomputed embedding for {key} has {mat.shape[0]} rows, sentence has {n_tokens} tokens"
            )
        return mat

    def save(self, path) -> None:
        entries = []
        blobs = []
        offset = 0
        for (doc_id, sent_index), mat in self._matrices.items():
            blob = np.ascontiguousarray(mat, dtype="<f8").tobytes()
            entries.append(
                {"doc": doc_id, "sent": sent_index, "n_tokens": int(mat.shape[0]), "offset": offset}
            )
            blobs.append(blob)
            offset += len(blob)
        header = json.dumps(
            {"version": PRECOMPUTED_VERSION, "width": self.width, "entries": entries},
            sort_keys=True,
        ).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(PRECOMPUTED_MAGIC)
            fh.write(struct.pack("<IQ", PRECOMPUTED_VERSION, len(header)))
            fh.write(header)
            for blob in blobs:
                fh.write(blob)

    @classmethod
    def load(cls, path) -> "PrecomputedEmbeddings":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != PRECOMPUTED_MAGIC:
                raise ValueError(f"not a precomputed-embedding file: bad magic {magic!r}")
            version, header_len = struct.unpack("<IQ", fh.read(12))
            if version != PRECOMPUTED_VERSION:
                raise ValueError(f"unsupported embedding file version {version}")
            header = json.loads(fh.read(header_len).decode("utf-8"))
            width = header["width"]
            blob = fh.read()
        matrices = {}
        for entry in header["entries"]:
            n = entry["n_tokens"]
            start = entry["offset"]
            end = start + n * width * 8
            mat = np.frombuffer(blob[start:end], dtype="<f8").reshape(n, width).copy()
            matrices[(entry["doc"], entry["sent"])] = mat
        return cls(width, matrices)
