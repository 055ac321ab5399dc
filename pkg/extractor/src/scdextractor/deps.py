"""Rule-based extraction of (adjective, head noun) dependency records.

For each attributive occurrence of the target adjective, a record
(adj lemma, lemmatized head noun, year, journal, doc_id) is emitted as one
JSON-Lines object. The head is resolved deterministically: the word
immediately following the adjective, provided it is a content word; an
occurrence with no resolvable head (predicative use, sentence-final
position, or a following function word) produces no record and increments
the skip count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .records import SentenceRecord
from .encoder import normalize_word

# Words that cannot be the head noun of an attributive adjective; hitting
# one right after the target means the occurrence is not a plain
# adjective-noun pair (predicative use, coordination, PP attachment, ...).
_NON_HEAD_WORDS = frozenset(
    """a an the and or but nor of in on at by for with without from to into
    onto over under between through during before after above below is are
    was were be been being am do does did have has had will would shall
    should can could may might must not no it its he his she her they them
    their we us our you your this that these those there here when where
    which who whom whose than then as if because while so such""".split()
)

_COPULAS = frozenset(
    "is are was were be been being am seems seemed appears appeared remains remained becomes became".split()
)


@dataclass(frozen=True)
class DependencyExtraction:
    """Extraction output: the records plus per-occurrence skip bookkeeping."""

    records: tuple[dict, ...]
    skipped: int


def lemmatize_noun(word: str) -> str:
    """Strip regular English plural endings (photons -> photon)."""
    if len(word) > 4 and word.endswith("ies"):
        return word[:-3] + "y"
    for suffix in ("ses", "xes", "zes", "ches", "shes"):
        if len(word) > len(suffix) and word.endswith(suffix):
            return word[:-2]
    if (
        len(word) > 3
        and word.endswith("s")
        and not word.endswith(("ss", "us", "is"))
    ):
        return word[:-1]
    return word


def extract_dependencies(
    sentences: Sequence[SentenceRecord], target: str = "virtual"
) -> DependencyExtraction:
    """Collect (target -> head noun) records from attributive occurrences."""
    if not target or target != target.lower():
        raise ValueError("target must be a non-empty lowercase string")
    records: list[dict] = []
    skipped = 0
    for sentence in sentences:
        words = [w for w in (normalize_word(t) for t in sentence.text.split()) if w]
        for i, word in enumerate(words):
            if word != target:
                continue
            preceded_by_copula = i > 0 and words[i - 1] in _COPULAS
            head = words[i + 1] if i + 1 < len(words) else None
            if (
                preceded_by_copula
                or head is None
                or head in _NON_HEAD_WORDS
                or not any(c.isalpha() for c in head)
            ):
                skipped += 1
                continue
            records.append(
                {
                    "adj_lemma": target,
                    "head_lemma": lemmatize_noun(head),
                    "year": sentence.year,
                    "journal": sentence.journal,
                    "doc_id": sentence.doc_id,
                }
            )
    return DependencyExtraction(records=tuple(records), skipped=skipped)


def write_dependency_records(records: Iterable[dict], path) -> Path:
    """Write records as compact JSON-Lines (the analysis-side input format)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(
                json.dumps(
                    {
                        "adj_lemma": rec["adj_lemma"],
                        "head_lemma": rec["head_lemma"],
                        "year": rec["year"],
                        "journal": rec["journal"],
                        "doc_id": rec["doc_id"],
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    return path
