"""Command line: train / predict / eval / serve.

Flags can be preset through NERFORGE_* environment variables (e.g.
NERFORGE_PORT, NERFORGE_MODEL, NERFORGE_SEED); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus_io
from .bundle import ModelBundle, load_bundle, save_bundle
from .encoder import EncoderConfig, PrecomputedEmbeddings, init_encoder
from .evaluator import render_report, report_lines, score_flat, score_nested
from .heads import init_flat_heads, init_nested_head
from .inference import predict_spans
from .server import DEFAULT_MAX_PAYLOAD, ModelStore, create_app
from .tagsets import TagsetRegistry, load_registry, load_registry_file
from .tokenizer import tokenize_plain
from .trainer import TrainCorpus, TrainConfig, train
from .types import Document, Sentence


def _env(name: str, default=None):
    return os.environ.get(f"NERFORGE_{name}", default)


class CliError(Exception):
    pass


def _load_corpus(entry: dict, registry: TagsetRegistry | None) -> TrainCorpus:
    path = entry["path"]
    text = Path(path).read_text(encoding="utf-8")
    fmt = entry.get("format", "flat")
    if fmt == "flat":
        docs = corpus_io.parse_flat_conll(
            text,
            token_column=entry.get("token_column", 0),
            label_column=entry.get("label_column", -1),
            corpus_id=entry["id"],
            language=entry.get("language", ""),
        )
    elif fmt == "nested":
        docs = corpus_io.parse_nested(
            text, corpus_id=entry["id"], language=entry.get("language", "")
        )
    else:
        raise CliError(f"corpus {entry['id']!r}: unknown format {fmt!r}")
    return TrainCorpus(entry["id"], entry["tagset"], docs)


def _registry_from_config(config: dict) -> TagsetRegistry | None:
    if "tagsets" in config:
        return load_registry(json.dumps({"version": 1, "tagsets": config["tagsets"]}))
    if "tagset_config" in config:
        return load_registry_file(config["tagset_config"])
    return None


def cmd_train(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    kind = config.get("kind", "flat")
    if kind not in ("flat", "nested"):
        raise CliError(f"config kind must be flat or nested, got {kind!r}")

    train_corpora = [_load_corpus(e, None) for e in config["train_corpora"]]
    dev_corpora = [_load_corpus(e, None) for e in config.get("dev_corpora", [])]
    registry = _registry_from_config(config)
    if registry is None:
        from .estimators import infer_registry

        registry = infer_registry(train_corpora, nested=kind == "nested")

    tc_fields = {f: config[f] for f in TrainConfig.__dataclass_fields__ if f in config}
    if args.seed is not None:
        tc_fields["seed"] = args.seed
    tconfig = TrainConfig(**tc_fields)

    enc_cfg = EncoderConfig(**config.get("encoder", {}))
    rng = np.random.default_rng(tconfig.seed)
    encoder = init_encoder(enc_cfg, rng)
    if kind == "flat":
        bundle = ModelBundle(
            kind="flat",
            registry=registry,
            encoder=encoder,
            flat_heads=init_flat_heads(registry, enc_cfg.width, rng),
            meta={"languages": config.get("languages", []), "max_len": tconfig.max_len},
        )
    else:
        nested_tagset = config.get("nested_tagset", train_corpora[0].tagset)
        bundle = ModelBundle(
            kind="nested",
            registry=registry,
            encoder=encoder,
            nested=init_nested_head(registry[nested_tagset].etypes, enc_cfg.width, rng),
            meta={
                "languages": config.get("languages", []),
                "max_len": tconfig.max_len,
                "nested_tagset": nested_tagset,
            },
        )

    embedders = {
        cid: PrecomputedEmbeddings.load(path)
        for cid, path in config.get("embeddings", {}).items()
    }
    result = train(tconfig, bundle, train_corpora, dev_corpora or train_corpora, embedders or None)

    model_out = args.model or config.get("model_out", "model.ckpt")
    save_bundle(result.bundle, model_out)
    history_out = config.get("history_out")
    if history_out:
        Path(history_out).write_text("\n".join(result.history_lines()) + "\n", encoding="utf-8")
    print(f"best epoch {result.best_epoch} (dev macro F1 {result.best_score:.4f}) -> {model_out}")
    return 0


def _read_input(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_output(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_predict(args) -> int:
    if not args.model:
        raise CliError("predict requires --model")
    bundle = load_bundle(args.model)
    text = _read_input(args.input_file)
    if args.input == "plain":
        sentences = tokenize_plain(text)
    else:
        sentences = corpus_io.parse_conll_tokens(text)
    tagset = args.tagset
    if bundle.kind == "flat" and tagset is None:
        names = list(bundle.flat_heads.heads)
        if len(names) != 1:
            raise CliError(f"model has tagsets {names}; pass --tagset")
        tagset = names[0]

    results = [(s.words, predict_spans(bundle, s.words, tagset)) for s in sentences]
    if args.output == "json":
        from .server import spans_payload

        payload = {
            "model": str(args.model),
            "tagset": tagset,
            "sentences": [
                {"tokens": list(words), "spans": spans_payload(words, spans)}
                for words, spans in results
            ],
        }
        _write_output(args.output_file, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
    elif args.output == "vertical":
        from .server import format_vertical

        _write_output(args.output_file, format_vertical(results))
    else:
        if bundle.kind == "flat":
            doc = Document(id="cli", sentences=[Sentence.make(w, flat=sp) for w, sp in results])
            _write_output(args.output_file, corpus_io.write_flat_conll(doc))
        else:
            doc = Document(id="cli", sentences=[Sentence.make(w, nested=sp) for w, sp in results])
            _write_output(args.output_file, corpus_io.write_nested(doc))
    return 0


def _all_sentences(docs: list[Document]) -> list[Sentence]:
    return [s for doc in docs for s in doc.sentences]


def cmd_eval(args) -> int:
    gold_text = Path(args.gold).read_text(encoding="utf-8")
    pred_text = Path(args.pred).read_text(encoding="utf-8")
    if args.format == "flat":
        gold = _all_sentences(corpus_io.parse_flat_conll(gold_text))
        pred = _all_sentences(corpus_io.parse_flat_conll(pred_text))
        total, per_type = score_flat(
            [s.flat_spans for s in gold], [s.flat_spans for s in pred]
        )
    else:
        gold = _all_sentences(corpus_io.parse_nested(gold_text))
        pred = _all_sentences(corpus_io.parse_nested(pred_text, strict=False))
        golds = [s.nested_spans for s in gold]
        preds = [s.nested_spans for s in pred]
        total = score_nested(golds, preds)
        per_type = score_flat(golds, preds)[1]
    report = {args.corpus: (total, per_type)}
    print(render_report(report))
    if args.records:
        Path(args.records).write_text("\n".join(report_lines(report)) + "\n", encoding="utf-8")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    if not args.model:
        raise CliError("serve requires at least one --model [name=]path")
    store = ModelStore()
    paths = {}
    for spec_arg in args.model:
        if "=" in spec_arg:
            name, path = spec_arg.split("=", 1)
        else:
            name, path = Path(spec_arg).stem, spec_arg
        paths[name] = path
    store.load_paths(paths)
    app = create_app(store, max_payload=args.max_payload, webui_dir=args.webui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nerforge", description="flat and nested NER toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a JSON config")
    p_train.add_argument("--config", default=_env("CONFIG"), required=_env("CONFIG") is None)
    p_train.add_argument("--model", default=_env("MODEL"), help="checkpoint output path")
    p_train.add_argument("--seed", type=int, default=_env("SEED"))
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="annotate a file with a trained model")
    p_pred.add_argument("--model", default=_env("MODEL"))
    p_pred.add_argument("--tagset", default=_env("TAGSET"))
    p_pred.add_argument("--input", choices=("plain", "conll"), default="plain")
    p_pred.add_argument("--output", choices=("json", "conll", "vertical"), default="conll")
    p_pred.add_argument("input_file", nargs="?", help="input path or - for stdin")
    p_pred.add_argument("-o", "--output-file", help="output path or - for stdout")
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("eval", help="score predictions against gold annotation")
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--format", choices=("flat", "nested"), default="flat")
    p_eval.add_argument("--corpus", default="corpus", help="corpus name in the report")
    p_eval.add_argument("--records", help="also write machine-readable records here")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP annotation service")
    p_serve.add_argument("--model", action="append", default=None, help="[name=]checkpoint, repeatable")
    p_serve.add_argument("--port", type=int, default=int(_env("PORT", 8000)))
    p_serve.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    p_serve.add_argument("--webui", default=_env("WEBUI"), help="directory of built web UI")
    p_serve.add_argument(
        "--max-payload", type=int, default=int(_env("MAX_PAYLOAD", DEFAULT_MAX_PAYLOAD))
    )
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve" and not args.model and _env("MODEL"):
        args.model = [_env("MODEL")]
    try:
        return args.func(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"nerforge {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
