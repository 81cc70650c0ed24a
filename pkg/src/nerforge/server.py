"""HTTP annotation service.

Endpoints:

* ``POST /recognize`` -- annotate text with a loaded model; input ``plain``
  (rule-based tokenization) or ``conll`` (pre-tokenized, first column);
  output ``json``, ``conll``, or ``vertical`` (one entity per line:
  ``first,last<TAB>type<TAB>text`` with 1-based token ordinals numbered
  continuously over the request).
* ``GET /models`` -- the loaded bundles: name, kind, tagsets, languages.
* ``POST /admin/reload`` -- atomically replace the loaded models from disk.

Model bundles are immutable snapshots: every request resolves the model
table exactly once, so a concurrent reload never mixes old and new weights
within one request.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .bundle import ModelBundle, load_bundle
from .corpus_io import parse_conll_tokens, write_flat_conll, write_nested
from .inference import predict_spans
from .tokenizer import tokenize_plain
from .types import Document, EntitySpan, Sentence, canonical_key

DEFAULT_MAX_PAYLOAD = 1 << 20  # 1 MiB


@dataclass(frozen=True)
class LoadedModel:
    name: str
    bundle: ModelBundle

    @property
    def kind(self) -> str:
        return self.bundle.kind

    @property
    def tagsets(self) -> list[str]:
        return self.bundle.tagset_names

    @property
    def languages(self) -> list[str]:
        return list(self.bundle.meta.get("languages", []))


@dataclass
class ModelStore:
    """Read-mostly model table; replace() swaps the whole snapshot atomically."""

    _snapshot: dict[str, LoadedModel] = field(default_factory=dict)

    def snapshot(self) -> dict[str, LoadedModel]:
        return self._snapshot

    def replace(self, models: dict[str, ModelBundle]) -> None:
        self._snapshot = {name: LoadedModel(name, b) for name, b in models.items()}

    def load_paths(self, paths: dict[str, str]) -> None:
        self.replace({name: load_bundle(path) for name, path in paths.items()})


class RecognizeRequest(BaseModel):
    data: str = ""
    model: str
    tagset: str | None = None
    input: Literal["plain", "conll"] = "plain"
    output: Literal["json", "conll", "vertical"] = "json"


def spans_payload(words: tuple[str, ...], spans: list[EntitySpan]) -> list[dict]:
    return [
        {
            "start": s.start,
            "end": s.end,
            "type": s.etype,
            "text": " ".join(words[s.start : s.end]),
        }
        for s in sorted(spans, key=canonical_key)
    ]


def format_vertical(sentences: list[tuple[tuple[str, ...], list[EntitySpan]]]) -> str:
    lines = []
    offset = 0
    for words, spans in sentences:
        for s in sorted(spans, key=canonical_key):
            text = " ".join(words[s.start : s.end])
            lines.append(f"{offset + s.start + 1},{offset + s.end}\t{s.etype}\t{text}")
        offset += len(words)
    return "\n".join(lines) + ("\n" if lines else "")


def create_app(
    store: ModelStore,
    max_payload: int = DEFAULT_MAX_PAYLOAD,
    webui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="nerforge", version="0.1.0")

    @app.get("/models")
    def list_models() -> list[dict]:
        return [
            {
                "name": m.name,
                "type": m.kind,
                "tagsets": m.tagsets,
                "languages": m.languages,
            }
            for m in sorted(store.snapshot().values(), key=lambda m: m.name)
        ]

    @app.post("/recognize")
    def recognize(req: RecognizeRequest):
        if len(req.data.encode("utf-8")) > max_payload:
            raise HTTPException(413, f"payload exceeds {max_payload} bytes")
        models = store.snapshot()
        model = models.get(req.model)
        if model is None:
            raise HTTPException(404, f"unknown model {req.model!r}")
        bundle = model.bundle
        tagset = req.tagset
        if bundle.kind == "flat":
            names = list(bundle.flat_heads.heads)
            if tagset is None:
                if len(names) != 1:
                    raise HTTPException(400, f"model has tagsets {names}; specify one")
                tagset = names[0]
            elif tagset not in names:
                raise HTTPException(400, f"unknown tagset {tagset!r} for model {req.model!r}")
        elif tagset is None:
            tagset = bundle.tagset_names[0]
        elif tagset not in bundle.tagset_names:
            raise HTTPException(400, f"unknown tagset {tagset!r} for model {req.model!r}")
        sentences = tokenize_plain(req.data) if req.input == "plain" else parse_conll_tokens(req.data)
        results = [
            (s.words, predict_spans(bundle, s.words, tagset)) for s in sentences
        ]
        if req.output == "json":
            return {
                "model": model.name,
                "tagset": tagset,
                "sentences": [
                    {"tokens": list(words), "spans": spans_payload(words, spans)}
                    for words, spans in results
                ],
            }
        if req.output == "vertical":
            return PlainTextResponse(format_vertical(results))
        if bundle.kind == "flat":
            doc = Document(
                id="request",
                sentences=[Sentence.make(w, flat=sp) for w, sp in results],
            )
            return PlainTextResponse(write_flat_conll(doc))
        doc = Document(
            id="request",
            sentences=[Sentence.make(w, nested=sp) for w, sp in results],
        )
        return PlainTextResponse(write_nested(doc))

    @app.post("/admin/reload")
    def reload_models(body: dict):
        paths = body.get("models")
        if not isinstance(paths, dict):
            raise HTTPException(400, "body must be {'models': {name: path}}")
        try:
            store.load_paths(paths)
        except (OSError, ValueError) as exc:
            raise HTTPException(400, f"reload failed: {exc}") from None
        return {"loaded": sorted(store.snapshot())}

    if webui_dir and os.path.isdir(webui_dir):
        app.mount("/", StaticFiles(directory=webui_dir, html=True), name="webui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return (
                "<!doctype html><title>nerforge</title>"
                "<h1>nerforge annotation service</h1>"
                "<p>POST /recognize with JSON {data, model, tagset?, input, output}; "
                "GET /models lists loaded models. Build the frontend for the full UI.</p>"
            )

    return app
