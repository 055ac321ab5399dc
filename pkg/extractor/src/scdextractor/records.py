"""Sentence records: the unit of input for embedding and dependency extraction.

Sentences travel as JSON-Lines with keys ``doc_id``, ``year``, ``journal``,
``text`` (one object per line, blank lines ignored). Read errors carry the
offending line number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

YEAR_MIN = 1000
YEAR_MAX = 9999

_KEYS = ("doc_id", "year", "journal", "text")


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence plus the document metadata it inherits."""

    doc_id: str
    year: int
    journal: str
    text: str

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("sentence text must be non-empty")
        if not (YEAR_MIN <= self.year <= YEAR_MAX):
            raise ValueError(
                f"year {self.year} outside [{YEAR_MIN}, {YEAR_MAX}]"
            )


def read_sentences(path) -> list[SentenceRecord]:
    """Parse a sentences JSONL file; errors name the bad line."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as handle:
        for i, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{i}: malformed JSON: {exc}") from exc
            if not isinstance(obj, dict) or not all(k in obj for k in _KEYS):
                raise ValueError(f"{path}:{i}: missing keys (need {', '.join(_KEYS)})")
            try:
                records.append(
                    SentenceRecord(
                        doc_id=str(obj["doc_id"]),
                        year=int(obj["year"]),
                        journal=str(obj["journal"]),
                        text=str(obj["text"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{i}: invalid record: {exc}") from exc
    return records


def write_sentences(records: Iterable[SentenceRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(
                json.dumps(
                    {
                        "doc_id": rec.doc_id,
                        "year": rec.year,
                        "journal": rec.journal,
                        "text": rec.text,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    return path


def segment_document(
    text: str, doc_id: str, year: int, journal: str
) -> list[SentenceRecord]:
    """Split a document into sentence records, propagating the metadata.

    Deterministic rule-based segmentation: a sentence ends at ``.``, ``!``,
    or ``?`` followed by whitespace (or end of text). Whitespace runs inside
    a sentence are collapsed to single spaces. Raises on empty input;
    returns [] for text with no word characters.
    """
    if not text or not text.strip():
        raise ValueError("document text must be non-empty")
    sentences: list[str] = []
    current: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        current.append(ch)
        if ch in ".!?" and (i + 1 == n or text[i + 1].isspace()):
            sentence = "".join(current).strip()
            if sentence.strip(".!?"):
                sentences.append(" ".join(sentence.split()))
            current = []
        i += 1
    tail = "".join(current).strip()
    if tail.strip(".!?"):
        sentences.append(" ".join(tail.split()))
    return [
        SentenceRecord(doc_id=doc_id, year=year, journal=journal, text=s)
        for s in sentences
    ]
