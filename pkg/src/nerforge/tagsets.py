"""Named label inventories and their dense id maps.

A tagset holds an ordered list of entity types; its label inventory is the
BIO closure ``O, B-X, I-X`` for each type, with ``O`` always id 0 and ids
assigned in order of appearance, so id assignment is a pure function of the
config text.  Prediction routing uses one tagset per classification head.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

REGISTRY_FORMAT_VERSION = 1


class TagsetError(ValueError):
    pass


@dataclass(frozen=True)
class Tagset:
    name: str
    etypes: tuple[str, ...]
    label_ids: dict[str, int] = field(init=False, repr=False)
    id_labels: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.etypes:
            raise TagsetError(f"tagset {self.name!r} has no entity types")
        seen = set()
        for etype in self.etypes:
            if etype in seen:
                raise TagsetError(f"duplicate entity type {etype!r} in tagset {self.name!r}")
            seen.add(etype)
        labels = ["O"]
        for etype in self.etypes:
            labels.append("B-" + etype)
            labels.append("I-" + etype)
        object.__setattr__(self, "id_labels", tuple(labels))
        object.__setattr__(self, "label_ids", {lab: i for i, lab in enumerate(labels)})

    @property
    def n_labels(self) -> int:
        return 1 + 2 * len(self.etypes)

    def encode(self, labels: Iterable[str]) -> list[int]:
        try:
            return [self.label_ids[lab] for lab in labels]
        except KeyError as exc:
            raise TagsetError(f"label {exc.args[0]!r} not in tagset {self.name!r}") from None

    def decode(self, ids: Iterable[int]) -> list[str]:
        table = self.id_labels
        try:
            return [table[i] for i in ids]
        except IndexError:
            raise TagsetError(f"label id out of range for tagset {self.name!r}") from None


def validate_labels(tagset: Tagset, label_ids: Sequence[int]) -> bool:
    """True iff every id maps to a label of this tagset."""
    n = tagset.n_labels
    return all(0 <= i < n for i in label_ids)


@dataclass
class TagsetRegistry:
    tagsets: dict[str, Tagset] = field(default_factory=dict)

    def add(self, tagset: Tagset) -> None:
        if tagset.name in self.tagsets:
            raise TagsetError(f"duplicate tagset name {tagset.name!r}")
        self.tagsets[tagset.name] = tagset

    def __getitem__(self, name: str) -> Tagset:
        try:
            return self.tagsets[name]
        except KeyError:
            raise TagsetError(f"unknown tagset {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.tagsets

    def names(self) -> list[str]:
        return list(self.tagsets)


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise TagsetError(f"duplicate tagset name {key!r}")
        seen[key] = value
    return seen


def load_registry(config_text: str) -> TagsetRegistry:
    """Build a registry from its JSON config.

    Format (version 1)::

        {"version": 1, "tagsets": {"conll": ["PER", "ORG", "LOC", "MISC"]}}

    Tagset order and entity-type order follow the file, so label ids are
    stable across runs for identical config text.
    """
    try:
        raw = json.loads(config_text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise TagsetError(f"malformed tagset config: {exc}") from None
    if not isinstance(raw, dict) or "tagsets" not in raw:
        raise TagsetError("tagset config must be an object with a 'tagsets' key")
    version = raw.get("version", REGISTRY_FORMAT_VERSION)
    if version != REGISTRY_FORMAT_VERSION:
        raise TagsetError(f"unsupported tagset config version {version!r}")
    registry = TagsetRegistry()
    for name, etypes in raw["tagsets"].items():
        if not isinstance(etypes, list) or not all(isinstance(e, str) for e in etypes):
            raise TagsetError(f"tagset {name!r} must list entity-type strings")
        registry.add(Tagset(name, tuple(etypes)))
    return registry


def load_registry_file(path) -> TagsetRegistry:
    with open(path, encoding="utf-8") as fh:
        return load_registry(fh.read())


def default_registry() -> TagsetRegistry:
    """The registry shipped with the package (see configs/tagsets.json)."""
    text = resources.files("nerforge").joinpath("configs/tagsets.json").read_text("utf-8")
    return load_registry(text)
