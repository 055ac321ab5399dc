"""Frequency tabulation of adjective→head-noun dependencies.

Consumes dependency records (one JSON object per line with keys
``adj_lemma, head_lemma, year, journal, doc_id``) produced by the extraction
stage, and tabulates the most frequent head lemmas per decade or per
journal, with each head's share of the group's dependencies.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

GROUP_KEYS = ("decade", "journal")
_RECORD_KEYS = ("adj_lemma", "head_lemma", "year", "journal", "doc_id")


@dataclass(frozen=True)
class DependencyRecord:
    """One adjectival-modifier occurrence: lowercase lemmas plus provenance."""

    adj_lemma: str
    head_lemma: str
    year: int
    journal: str
    doc_id: str

    def __post_init__(self) -> None:
        for name in ("adj_lemma", "head_lemma"):
            value = getattr(self, name)
            if not value:
                raise ValueError(f"{name} must be non-empty")
            if value != value.lower():
                raise ValueError(f"{name} must be lowercase, got {value!r}")


@dataclass(frozen=True)
class DepTableRow:
    group: str
    rank: int
    head_lemma: str
    count: int
    share: float

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0.0 < self.share <= 1.0:
            raise ValueError(f"share {self.share} outside (0, 1]")


@dataclass(frozen=True)
class DepTable:
    """Ranked head-lemma frequencies per group (decade or journal)."""

    group_by: str
    rows: tuple[DepTableRow, ...]

    def __post_init__(self) -> None:
        if self.group_by not in GROUP_KEYS:
            raise ValueError(f"group_by must be one of {GROUP_KEYS}, got {self.group_by!r}")
        rank = {}
        for row in self.rows:
            expected = rank.get(row.group, 0) + 1
            if row.rank != expected:
                raise ValueError(
                    f"group {row.group!r}: rank {row.rank} breaks the contiguous 1..n order"
                )
            rank[row.group] = row.rank

    def __len__(self) -> int:
        return len(self.rows)

    def groups(self) -> list[str]:
        out: list[str] = []
        for row in self.rows:
            if not out or out[-1] != row.group:
                out.append(row.group)
        return out


def decade_of(year: int) -> int:
    return (year // 10) * 10


def tabulate_top_dependencies(
    records: Iterable[DependencyRecord],
    group_by: str,
    k: int | None = None,
) -> DepTable:
    """Per group, the ``k`` most frequent head lemmas with counts and shares.

    ``k=None`` keeps every lemma (shares then sum to 1 per group). Ties are
    broken lexicographically by lemma. Decade groups are ordered ascending,
    journal groups lexicographically; the result is independent of the input
    order.
    """
    if group_by not in GROUP_KEYS:
        raise ValueError(f"group_by must be one of {GROUP_KEYS}, got {group_by!r}")
    if k is not None and k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    counts: dict = defaultdict(Counter)
    for rec in records:
        key = decade_of(rec.year) if group_by == "decade" else rec.journal
        counts[key][rec.head_lemma] += 1
    rows: list[DepTableRow] = []
    for key in sorted(counts):
        group = str(key)
        counter = counts[key]
        total = sum(counter.values())
        ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
        if k is not None:
            ranked = ranked[:k]
        for rank, (lemma, count) in enumerate(ranked, start=1):
            rows.append(
                DepTableRow(
                    group=group,
                    rank=rank,
                    head_lemma=lemma,
                    count=count,
                    share=count / total,
                )
            )
    return DepTable(group_by=group_by, rows=tuple(rows))


def read_dependency_records(path) -> list[DependencyRecord]:
    """Parse a dependency JSON-Lines file, validating keys per line."""
    records: list[DependencyRecord] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{i}: malformed JSON") from exc
            missing = [key for key in _RECORD_KEYS if key not in obj]
            if missing:
                raise ValueError(f"{path}:{i}: missing keys {missing}")
            try:
                records.append(
                    DependencyRecord(
                        adj_lemma=str(obj["adj_lemma"]),
                        head_lemma=str(obj["head_lemma"]),
                        year=int(obj["year"]),
                        journal=str(obj["journal"]),
                        doc_id=str(obj["doc_id"]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{i}: invalid record: {exc}") from exc
    return records


def write_dependency_records(records: Sequence[DependencyRecord], path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "adj_lemma": rec.adj_lemma,
                "head_lemma": rec.head_lemma,
                "year": rec.year,
                "journal": rec.journal,
                "doc_id": rec.doc_id,
            }
            fh.write(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")
    return out


def dep_table_to_csv_text(table: DepTable) -> str:
    lines = ["group,rank,head_lemma,count,share"]
    for row in table.rows:
        lines.append(f"{row.group},{row.rank},{row.head_lemma},{row.count},{row.share!r}")
    return "\n".join(lines) + "\n"


def write_dep_table_csv(table: DepTable, path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dep_table_to_csv_text(table), encoding="utf-8")
    return out
