"""Model bundles and their single-file checkpoint format.

A bundle is everything inference needs: the tagset registry snapshot, the
encoder parameters, and either the per-tagset flat heads or the nested
decoder head, plus free-form metadata (languages, a config echo).

Checkpoint layout (version 1), all little-endian::

    magic "NRFG" | u32 format version | u64 header length | header JSON
    | raw float64 array bytes (sorted by name) | sha256 of all prior bytes

The byte stream is a pure function of the bundle contents -- no timestamps,
canonical JSON, fixed array order -- so identical training runs produce
byte-identical checkpoints.  Loading verifies the checksum and all shapes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .encoder import EncoderConfig, EncoderParams
from .heads import AffineHead, FlatHeads, NestedHead
from .tagsets import Tagset, TagsetRegistry

CHECKPOINT_MAGIC = b"NRFG"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class ModelBundle:
    kind: Literal["flat", "nested"]
    registry: TagsetRegistry
    encoder: EncoderParams
    flat_heads: FlatHeads | None = None
    nested: NestedHead | None = None
    meta: dict = field(default_factory=dict)

    def arrays(self) -> dict[str, np.ndarray]:
        out = dict(self.encoder.arrays())
        if self.flat_heads is not None:
            out.update(self.flat_heads.arrays())
        if self.nested is not None:
            out.update(self.nested.arrays())
        return out

    @property
    def tagset_names(self) -> list[str]:
        if self.kind == "flat":
            return list(self.flat_heads.heads) if self.flat_heads else []
        return [self.meta.get("nested_tagset", "nested")]


def serialize_bundle(bundle: ModelBundle) -> bytes:
    arrays = bundle.arrays()
    manifest = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        blob = arr.tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "kind": bundle.kind,
        "registry": [[t.name, list(t.etypes)] for t in bundle.registry.tagsets.values()],
        "encoder_config": bundle.encoder.config.to_dict(),
        "encoder_frozen": bundle.encoder.frozen,
        "flat_tagsets": list(bundle.flat_heads.heads) if bundle.flat_heads else None,
        "nested_etypes": list(bundle.nested.etypes) if bundle.nested else None,
        "meta": bundle.meta,
        "arrays": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(
        [
            CHECKPOINT_MAGIC,
            struct.pack("<IQ", CHECKPOINT_VERSION, len(header_bytes)),
            header_bytes,
            *blobs,
        ]
    )
    return payload + hashlib.sha256(payload).digest()


def deserialize_bundle(data: bytes) -> ModelBundle:
    if len(data) < 48 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a model checkpoint (bad magic)")
    payload, digest = data[:-32], data[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch (file corrupted or truncated)")
    version, header_len = struct.unpack("<IQ", payload[4:16])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(payload[16 : 16 + header_len].decode("utf-8"))
    blob = payload[16 + header_len :]

    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) * 8
        start = entry["offset"]
        if start + size > len(blob):
            raise CheckpointError(f"array {entry['name']!r} extends past end of file")
        arrays[entry["name"]] = (
            np.frombuffer(blob[start : start + size], dtype="<f8").reshape(shape).copy()
        )

    def take(name: str, *shape) -> np.ndarray:
        try:
            arr = arrays[name]
        except KeyError:
            raise CheckpointError(f"checkpoint missing array {name!r}") from None
        if shape and arr.shape != shape:
            raise CheckpointError(f"array {name!r} has shape {arr.shape}, expected {shape}")
        return arr

    registry = TagsetRegistry()
    for name, etypes in header["registry"]:
        registry.add(Tagset(name, tuple(etypes)))
    config = EncoderConfig(**header["encoder_config"])
    d = config.width
    encoder = EncoderParams(
        config=config,
        buckets=take("encoder.buckets", config.n_buckets, d),
        wq=take("encoder.wq", d, d),
        wk=take("encoder.wk", d, d),
        wv=take("encoder.wv", d, d),
        wo=take("encoder.wo", d, d),
        frozen=bool(header["encoder_frozen"]),
    )
    flat_heads = None
    if header["flat_tagsets"] is not None:
        heads = {}
        for name in header["flat_tagsets"]:
            n_labels = registry[name].n_labels
            heads[name] = AffineHead(
                w=take(f"flat.{name}.w", d, n_labels),
                b=take(f"flat.{name}.b", n_labels),
            )
        flat_heads = FlatHeads(heads)
    nested = None
    if header["nested_etypes"] is not None:
        etypes = tuple(header["nested_etypes"])
        vocab = 2 * len(etypes) + 1
        nested = NestedHead(
            etypes=etypes,
            label_emb=take("nested.label_emb", vocab + 1, d),
            wz=take("nested.wz", d, d),
            wr=take("nested.wr", d, d),
            wh=take("nested.wh", d, d),
            uz=take("nested.uz", d, d),
            ur=take("nested.ur", d, d),
            uh=take("nested.uh", d, d),
            bz=take("nested.bz", d),
            br=take("nested.br", d),
            bh=take("nested.bh", d),
            w_out=take("nested.w_out", d, vocab),
            b_out=take("nested.b_out", vocab),
        )
    return ModelBundle(
        kind=header["kind"],
        registry=registry,
        encoder=encoder,
        flat_heads=flat_heads,
        nested=nested,
        meta=header["meta"],
    )


def save_bundle(bundle: ModelBundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_bundle(bundle))


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        return deserialize_bundle(fh.read())
