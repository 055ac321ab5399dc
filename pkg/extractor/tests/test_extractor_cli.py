"""The ``scdx`` command line entry point."""

import json
import subprocess

import pytest

from scdextractor import read_sentences
from scdextractor.cli import build_parser, main


def write_config(tmp_path, _filename="config.json", **obj):
    path = tmp_path / _filename
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def write_sentences_file(tmp_path, texts, name="sentences.jsonl"):
    path = tmp_path / name
    with path.open("w", encoding="utf-8") as handle:
        for i, text in enumerate(texts):
            handle.write(
                json.dumps(
                    {"doc_id": f"d{i}", "year": 1950 + i, "journal": "J", "text": text}
                )
                + "\n"
            )
    return path


class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        actions = {a.dest: a for a in parser._actions}
        assert set(actions["command"].choices) == {"segment", "embed", "deps"}

    def test_config_is_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["deps"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_unknown_command_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["frobnicate", "--config", "x"])
        assert exc.value.code == 2
        capsys.readouterr()


class TestSegment:
    def test_splits_documents_into_sentence_records(self, tmp_path, capsys):
        docs = tmp_path / "docs.jsonl"
        docs.write_text(
            json.dumps(
                {"doc_id": "d1", "year": 1950, "journal": "P", "text": "A. B."}
            )
            + "\n",
            encoding="utf-8",
        )
        config = write_config(
            tmp_path, documents=str(docs), name="sents", out=str(tmp_path / "out")
        )
        assert main(["segment", "--config", str(config)]) == 0
        out_path = tmp_path / "out" / "sents.jsonl"
        assert str(out_path) in capsys.readouterr().out
        assert [r.text for r in read_sentences(out_path)] == ["A.", "B."]

    def test_missing_documents_key(self, tmp_path, capsys):
        config = write_config(tmp_path)
        assert main(["segment", "--config", str(config)]) == 1
        assert "scdx: error [config]" in capsys.readouterr().err

    def test_nonexistent_documents_file(self, tmp_path, capsys):
        config = write_config(tmp_path, documents=str(tmp_path / "missing.jsonl"))
        assert main(["segment", "--config", str(config)]) == 1
        assert "scdx: error [input]" in capsys.readouterr().err


class TestEmbed:
    def test_writes_store_file_pair(self, tmp_path, capsys, encoder_dir):
        sentences = write_sentences_file(tmp_path, ["the virtual photon decays ."])
        config = write_config(
            tmp_path,
            sentences=str(sentences),
            encoder=str(encoder_dir),
            max_length=32,
            expected_dim=16,
            name="run",
            out=str(tmp_path / "out"),
        )
        assert main(["embed", "--config", str(config)]) == 0
        captured = capsys.readouterr()
        assert (tmp_path / "out" / "run.vec").is_file()
        assert (tmp_path / "out" / "run.meta.jsonl").is_file()
        assert str(tmp_path / "out" / "run.vec") in captured.out
        assert "1 stored, 0 truncated, 0 filtered, 1 sentences" in captured.err

    def test_missing_sentences_key(self, tmp_path, capsys):
        config = write_config(tmp_path, encoder="x")
        assert main(["embed", "--config", str(config)]) == 1
        assert "scdx: error [config]" in capsys.readouterr().err

    def test_nonexistent_sentences_file(self, tmp_path, capsys):
        config = write_config(
            tmp_path, sentences=str(tmp_path / "missing.jsonl"), encoder="x"
        )
        assert main(["embed", "--config", str(config)]) == 1
        assert "scdx: error [input]" in capsys.readouterr().err

    def test_invalid_extraction_settings(self, tmp_path, capsys):
        sentences = write_sentences_file(tmp_path, ["a virtual state ."])
        config = write_config(
            tmp_path, sentences=str(sentences), encoder="x", max_length=2
        )
        assert main(["embed", "--config", str(config)]) == 1
        assert "scdx: error [config]" in capsys.readouterr().err

    def test_unloadable_encoder(self, tmp_path, capsys):
        sentences = write_sentences_file(tmp_path, ["a virtual state ."])
        config = write_config(
            tmp_path,
            sentences=str(sentences),
            encoder=str(tmp_path / "no-such-encoder"),
        )
        assert main(["embed", "--config", str(config)]) == 1
        assert "scdx: error [encoder]" in capsys.readouterr().err


class TestDeps:
    def test_writes_dependency_records(self, tmp_path, capsys):
        sentences = write_sentences_file(
            tmp_path, ["the virtual photon decays", "the photon is virtual ."]
        )
        config = write_config(
            tmp_path, sentences=str(sentences), out=str(tmp_path / "out")
        )
        assert main(["deps", "--config", str(config)]) == 0
        captured = capsys.readouterr()
        out_path = tmp_path / "out" / "deps.jsonl"
        assert str(out_path) in captured.out
        assert "1 records, 1 skipped" in captured.err
        assert json.loads(out_path.read_text())["head_lemma"] == "photon"

    def test_out_flag_overrides_config(self, tmp_path, capsys):
        sentences = write_sentences_file(tmp_path, ["virtual states mix"])
        config = write_config(
            tmp_path, sentences=str(sentences), out=str(tmp_path / "ignored")
        )
        override = tmp_path / "override"
        assert main(["deps", "--config", str(config), "--out", str(override)]) == 0
        capsys.readouterr()
        assert (override / "deps.jsonl").is_file()
        assert not (tmp_path / "ignored").exists()


class TestErrors:
    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["deps", "--config", str(tmp_path / "missing.json")]) == 1
        assert "scdx: error [config]" in capsys.readouterr().err

    def test_malformed_config_file(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["deps", "--config", str(path)]) == 1
        assert "scdx: error [config]" in capsys.readouterr().err


def test_installed_console_script(tmp_path):
    sentences = write_sentences_file(tmp_path, ["the virtual photon decays"])
    config = write_config(
        tmp_path, sentences=str(sentences), out=str(tmp_path / "out")
    )
    proc = subprocess.run(
        ["scdx", "deps", "--config", str(config)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "deps.jsonl").is_file()
    proc = subprocess.run(
        ["scdx", "deps", "--config", str(tmp_path / "missing.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "scdx: error [config]" in proc.stderr
