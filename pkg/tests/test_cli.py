import json

import numpy as np
import pytest

from nerforge.cli import main
from nerforge.corpus_io import write_flat_conll

from datagen import flat_pattern_corpus


@pytest.fixture()
def flat_files(tmp_path):
    rng = np.random.default_rng(0)
    train_doc = flat_pattern_corpus(rng, 40, "train")[0]
    dev_doc = flat_pattern_corpus(rng, 12, "dev")[0]
    train_path = tmp_path / "train.conll"
    dev_path = tmp_path / "dev.conll"
    train_path.write_text(write_flat_conll(train_doc), encoding="utf-8")
    dev_path.write_text(write_flat_conll(dev_doc), encoding="utf-8")
    return train_path, dev_path


@pytest.fixture()
def train_config(tmp_path, flat_files):
    train_path, dev_path = flat_files
    config = {
        "kind": "flat",
        "tagsets": {"synth": ["PER", "ORG", "LOC", "MISC"]},
        "encoder": {"width": 12, "n_buckets": 256},
        "train_corpora": [
            {"id": "train", "path": str(train_path), "tagset": "synth"}
        ],
        "dev_corpora": [{"id": "dev", "path": str(dev_path), "tagset": "synth"}],
        "epochs": 2,
        "batch_size": 4,
        "peak_learning_rate": 3e-3,
        "warmup_epochs": 1,
        "seed": 5,
        "model_out": str(tmp_path / "model.ckpt"),
        "history_out": str(tmp_path / "history.ndjson"),
    }
    path = tmp_path / "train.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path, config


class TestTrainCommand:
    def test_train_writes_model_and_history(self, tmp_path, train_config, capsys):
        config_path, config = train_config
        assert main(["train", "--config", str(config_path)]) == 0
        out = capsys.readouterr().out
        assert "best epoch" in out
        assert (tmp_path / "model.ckpt").exists()
        history = [
            json.loads(line)
            for line in (tmp_path / "history.ndjson").read_text().splitlines()
        ]
        assert {rec["epoch"] for rec in history} == {1, 2}
        assert all("f1" in rec for rec in history)

    def test_unknown_subcommand_nonzero(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code != 0

    def test_missing_config_nonzero(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "nope.json")]) == 1


class TestPredictEvalPipeline:
    def test_predict_then_eval_matches_inprocess(self, tmp_path, train_config, capsys):
        config_path, config = train_config
        assert main(["train", "--config", str(config_path)]) == 0
        capsys.readouterr()
        model = config["model_out"]
        dev_path = config["dev_corpora"][0]["path"]
        pred_path = tmp_path / "pred.conll"

        assert (
            main(
                [
                    "predict",
                    "--model",
                    model,
                    "--input",
                    "conll",
                    "--output",
                    "conll",
                    str(dev_path),
                    "-o",
                    str(pred_path),
                ]
            )
            == 0
        )
        assert pred_path.exists()

        assert (
            main(["eval", "--gold", str(dev_path), "--pred", str(pred_path)]) == 0
        )
        table = capsys.readouterr().out
        assert "ALL" in table

        # in-process comparison: same model, same dev file
        from nerforge.bundle import load_bundle
        from nerforge.corpus_io import parse_flat_conll
        from nerforge.evaluator import score_flat
        from nerforge.inference import predict_spans

        bundle = load_bundle(model)
        gold_docs = parse_flat_conll((tmp_path / "dev.conll").read_text())
        gold = [s for d in gold_docs for s in d.sentences]
        preds = [frozenset(predict_spans(bundle, s.words, "synth")) for s in gold]
        pred_docs = parse_flat_conll(pred_path.read_text())
        file_preds = [s.flat_spans for d in pred_docs for s in d.sentences]
        assert file_preds == preds
        inproc = score_flat([s.flat_spans for s in gold], preds)[0]
        assert f"{inproc.f1:.4f}" in table

    def test_eval_identical_files_perfect(self, tmp_path, flat_files, capsys):
        _, dev_path = flat_files
        assert main(["eval", "--gold", str(dev_path), "--pred", str(dev_path)]) == 0
        out = capsys.readouterr().out
        all_line = [line for line in out.splitlines() if " ALL " in line][0]
        assert "1.0000" in all_line

    def test_predict_missing_model_nonzero(self, tmp_path):
        missing = tmp_path / "missing.ckpt"
        code = main(["predict", "--model", str(missing), "-o", "-", str(tmp_path / "x")])
        assert code != 0

    def test_predict_json_output(self, tmp_path, train_config, capsys):
        config_path, config = train_config
        main(["train", "--config", str(config_path)])
        capsys.readouterr()
        infile = tmp_path / "in.txt"
        infile.write_text("John runs. Mary sits.")
        out_path = tmp_path / "out.json"
        assert (
            main(
                [
                    "predict",
                    "--model",
                    config["model_out"],
                    "--output",
                    "json",
                    str(infile),
                    "-o",
                    str(out_path),
                ]
            )
            == 0
        )
        payload = json.loads(out_path.read_text())
        assert len(payload["sentences"]) == 2
        assert payload["tagset"] == "synth"

    def test_vertical_output(self, tmp_path, train_config, capsys):
        config_path, config = train_config
        main(["train", "--config", str(config_path)])
        capsys.readouterr()
        infile = tmp_path / "in.txt"
        infile.write_text("pbaaa word1 word2")
        out_path = tmp_path / "out.vert"
        assert (
            main(
                [
                    "predict",
                    "--model",
                    config["model_out"],
                    "--output",
                    "vertical",
                    str(infile),
                    "-o",
                    str(out_path),
                ]
            )
            == 0
        )
        for line in out_path.read_text().splitlines():
            first, rest = line.split("\t", 1)
            lo, hi = first.split(",")
            assert int(lo) >= 1 and int(hi) >= int(lo)


class TestEnvOverrides:
    def test_port_env(self, monkeypatch):
        monkeypatch.setenv("NERFORGE_PORT", "9999")
        from nerforge.cli import build_parser

        args = build_parser().parse_args(["serve", "--model", "x=y"])
        assert args.port == 9999

    def test_flag_beats_env(self, monkeypatch):
        monkeypatch.setenv("NERFORGE_PORT", "9999")
        from nerforge.cli import build_parser

        args = build_parser().parse_args(["serve", "--model", "x=y", "--port", "7777"])
        assert args.port == 7777
