"""``scdx`` command line: segment documents, extract embeddings, extract deps.

Each subcommand reads one JSON config file; ``--out`` overrides the output
directory. Errors print to stderr tagged with the failing stage and the
process exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .deps import extract_dependencies, write_dependency_records
from .encoder import EncoderLoadError, ExtractionConfig, extract_to_files
from .records import SentenceRecord, read_sentences, segment_document, write_sentences


class ExtractorError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ExtractorError("config", f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ExtractorError("config", f"{path}: malformed JSON: {exc}") from exc


def _outdir(obj: dict, out) -> Path:
    return Path(out if out is not None else obj.get("out", "extracted"))


def _load_sentences(obj: dict) -> list[SentenceRecord]:
    path = obj.get("sentences")
    if not path:
        raise ExtractorError("config", "sentences path is required")
    try:
        return read_sentences(path)
    except FileNotFoundError as exc:
        raise ExtractorError("input", f"sentences file not found: {path}") from exc
    except ValueError as exc:
        raise ExtractorError("input", str(exc)) from exc


def run_segment(obj: dict, out=None) -> Path:
    docs_path = obj.get("documents")
    if not docs_path:
        raise ExtractorError("config", "documents path is required")
    sentences: list[SentenceRecord] = []
    try:
        with Path(docs_path).open("r", encoding="utf-8") as handle:
            for i, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                sentences.extend(
                    segment_document(
                        doc["text"],
                        doc_id=str(doc["doc_id"]),
                        year=int(doc["year"]),
                        journal=str(doc["journal"]),
                    )
                )
    except FileNotFoundError as exc:
        raise ExtractorError("input", f"documents file not found: {docs_path}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ExtractorError("segment", str(exc)) from exc
    outdir = _outdir(obj, out)
    return write_sentences(sentences, outdir / f"{obj.get('name', 'sentences')}.jsonl")


def run_embed(obj: dict, out=None):
    sentences = _load_sentences(obj)
    try:
        config = ExtractionConfig(
            encoder=str(obj.get("encoder", "")),
            target_token=str(obj.get("target", "virtual")),
            max_length=int(obj.get("max_length", 512)),
            expected_dim=obj.get("expected_dim"),
            store_all_meaningful=bool(obj.get("store_all_meaningful", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ExtractorError("config", str(exc)) from exc
    try:
        paths, report = extract_to_files(
            sentences, config, _outdir(obj, out) / str(obj.get("name", "store"))
        )
    except EncoderLoadError as exc:
        raise ExtractorError("encoder", str(exc)) from exc
    except ValueError as exc:
        raise ExtractorError("embed", str(exc)) from exc
    return paths, report


def run_deps(obj: dict, out=None):
    sentences = _load_sentences(obj)
    try:
        extraction = extract_dependencies(
            sentences, target=str(obj.get("target", "virtual"))
        )
        path = write_dependency_records(
            extraction.records,
            _outdir(obj, out) / f"{obj.get('name', 'deps')}.jsonl",
        )
    except ValueError as exc:
        raise ExtractorError("deps", str(exc)) from exc
    return path, extraction


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scdx",
        description="Sentence segmentation, embedding extraction, and dependency records.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("segment", "split raw documents into sentence records"),
        ("embed", "extract target-token embeddings into a store file pair"),
        ("deps", "extract (adjective, head noun) dependency records"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the JSON config file")
        cmd.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "segment":
            print(run_segment(_read_json(args.config), out=args.out))
        elif args.command == "embed":
            paths, report = run_embed(_read_json(args.config), out=args.out)
            for path in paths:
                print(path)
            print(
                f"{report.n_stored} stored, {report.truncated_occurrences} truncated, "
                f"{report.filtered_tokens} filtered, {report.n_sentences} sentences",
                file=sys.stderr,
            )
        else:
            path, extraction = run_deps(_read_json(args.config), out=args.out)
            print(path)
            print(
                f"{len(extraction.records)} records, {extraction.skipped} skipped",
                file=sys.stderr,
            )
    except ExtractorError as exc:
        print(f"scdx: error {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
