import numpy as np
import pytest

from nerforge.bundle import (
    CheckpointError,
    ModelBundle,
    deserialize_bundle,
    load_bundle,
    save_bundle,
    serialize_bundle,
)
from nerforge.encoder import EncoderConfig, init_encoder
from nerforge.heads import init_flat_heads, init_nested_head
from nerforge.optim import Adam, clip_global_norm
from nerforge.tagsets import Tagset, TagsetRegistry


def flat_bundle(seed=0):
    registry = TagsetRegistry()
    registry.add(Tagset("conll", ("PER", "ORG", "LOC", "MISC")))
    registry.add(Tagset("tiny", ("X",)))
    rng = np.random.default_rng(seed)
    config = EncoderConfig(width=6, n_buckets=32)
    return ModelBundle(
        kind="flat",
        registry=registry,
        encoder=init_encoder(config, rng),
        flat_heads=init_flat_heads(registry, 6, rng),
        meta={"languages": ["en"], "max_len": 128},
    )


def nested_bundle(seed=0):
    registry = TagsetRegistry()
    registry.add(Tagset("nested", ("PER", "ORG")))
    rng = np.random.default_rng(seed)
    config = EncoderConfig(width=6, n_buckets=32)
    return ModelBundle(
        kind="nested",
        registry=registry,
        encoder=init_encoder(config, rng),
        nested=init_nested_head(("PER", "ORG"), 6, rng),
        meta={"nested_tagset": "nested"},
    )


class TestCheckpoint:
    @pytest.mark.parametrize("factory", [flat_bundle, nested_bundle])
    def test_roundtrip_bitwise(self, factory):
        bundle = factory()
        data = serialize_bundle(bundle)
        loaded = deserialize_bundle(data)
        assert loaded.kind == bundle.kind
        assert loaded.meta == bundle.meta
        assert set(loaded.arrays()) == set(bundle.arrays())
        for name, arr in bundle.arrays().items():
            assert loaded.arrays()[name].tobytes() == arr.tobytes()
        assert serialize_bundle(loaded) == data

    def test_serialization_deterministic(self):
        assert serialize_bundle(flat_bundle(3)) == serialize_bundle(flat_bundle(3))

    def test_registry_and_label_ids_survive(self):
        loaded = deserialize_bundle(serialize_bundle(flat_bundle()))
        assert loaded.registry["conll"].label_ids["I-MISC"] == 8
        assert loaded.registry.names() == ["conll", "tiny"]

    def test_corruption_detected(self):
        data = bytearray(serialize_bundle(flat_bundle()))
        data[100] ^= 0xFF
        with pytest.raises(CheckpointError, match="checksum"):
            deserialize_bundle(bytes(data))

    def test_truncation_detected(self):
        data = serialize_bundle(flat_bundle())
        with pytest.raises(CheckpointError):
            deserialize_bundle(data[: len(data) - 7])

    def test_bad_magic(self):
        with pytest.raises(CheckpointError, match="magic"):
            deserialize_bundle(b"JUNK" + b"\x00" * 100)

    def test_file_roundtrip(self, tmp_path):
        bundle = nested_bundle(5)
        path = tmp_path / "model.ckpt"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        assert serialize_bundle(loaded) == serialize_bundle(bundle)


class TestOptim:
    def test_clip_noop_under_norm(self):
        grads = {"a": np.array([0.3, 0.4])}
        norm = clip_global_norm(grads, 1.0)
        assert norm == pytest.approx(0.5)
        assert np.allclose(grads["a"], [0.3, 0.4])

    def test_clip_scales_to_max_norm(self):
        grads = {"a": np.array([3.0, 0.0]), "b": np.array([4.0])}
        clip_global_norm(grads, 1.0)
        total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        assert total == pytest.approx(1.0)

    def test_adam_descends_quadratic(self):
        arrays = {"x": np.array([5.0, -3.0])}
        opt = Adam()
        for _ in range(2000):
            grads = {"x": 2 * arrays["x"]}
            opt.step(arrays, grads, lr=0.01)
        assert np.all(np.abs(arrays["x"]) < 1e-3)

    def test_skip_leaves_params_and_moments_untouched(self):
        arrays = {"x": np.array([1.0]), "y": np.array([2.0])}
        before = arrays["x"].tobytes()
        opt = Adam()
        for _ in range(5):
            opt.step(arrays, {"x": np.array([1.0]), "y": np.array([1.0])}, 0.1, skip={"x"})
        assert arrays["x"].tobytes() == before
        assert "x" not in opt.m
        assert arrays["y"][0] != 2.0

    def test_missing_grad_means_zero(self):
        arrays = {"x": np.array([1.0])}
        opt = Adam()
        opt.step(arrays, {}, 0.1)
        assert arrays["x"][0] == pytest.approx(1.0)
